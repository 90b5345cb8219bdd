//! Acceptance checks, shared by the `acceptance` test target and the CLI
//! `selftest` command. Each check returns a [`CriterionReport`]; a check
//! passes only if it also finishes within its time limit.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::base::{BaseMap, GOLDEN_CONJUGATE};
use crate::fiber::{FiberFamily, ForcedMap};
use crate::locking::{
    classify, plateau_width, unlocked_from_stats, ClassifyBudget, LockClassification,
};
use crate::lyapunov::{derivative_integral_check, exponent_bounds};
use crate::probe::{
    exponent_minimize, lock_search, objective, ExponentSearchConfig, LockSearchConfig,
};
use crate::rng;
use crate::rotation::{displacement_bounds, rotation_enclosure};
use crate::scan::{locked_run_end, tongue_scan, ScanConfig};
use crate::trig::TrigPoly;
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    pub limit_secs: f64,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.2} s, limit {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed_secs,
            self.limit_secs
        )
    }
}

/// A check body returns whether its numeric conditions held and a summary.
type Body = fn() -> Result<(bool, String)>;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub limit_secs: f64,
    body: Body,
}

impl Criterion {
    pub fn run(&self) -> CriterionReport {
        let start = Instant::now();
        let (ok, detail) = match (self.body)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let elapsed = start.elapsed().as_secs_f64();
        let in_time = elapsed < self.limit_secs;
        CriterionReport {
            id: self.id,
            name: self.name,
            passed: ok && in_time,
            detail: if in_time {
                detail
            } else {
                format!("{detail}; over time limit")
            },
            elapsed_secs: elapsed,
            limit_secs: self.limit_secs,
        }
    }
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "structure", limit_secs: 10.0, body: structure },
    Criterion { id: 2, name: "rotation-oracle", limit_secs: 1.0, body: rotation_oracle },
    Criterion { id: 3, name: "normalization", limit_secs: 30.0, body: normalization },
    Criterion { id: 4, name: "exponent-oracle", limit_secs: 60.0, body: exponent_oracle },
    Criterion { id: 5, name: "exponent-signs", limit_secs: 120.0, body: exponent_signs },
    Criterion { id: 6, name: "lock-oracle", limit_secs: 60.0, body: lock_oracle },
    Criterion { id: 7, name: "tongue-width", limit_secs: 300.0, body: tongue_width },
    Criterion { id: 8, name: "unlocked-persistence", limit_secs: 120.0, body: persistence },
    Criterion { id: 9, name: "scan-determinism", limit_secs: 600.0, body: scan_determinism },
    Criterion { id: 10, name: "probe-soundness", limit_secs: 600.0, body: probe_soundness },
];

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().map(Criterion::run).collect()
}

fn golden() -> BaseMap {
    BaseMap::rotation(&[GOLDEN_CONJUGATE]).expect("golden rotation")
}

fn arnold(tau: f64, alpha: f64, beta: f64) -> ForcedMap {
    ForcedMap::new(
        golden(),
        FiberFamily::arnold(tau, alpha, beta, TrigPoly::cos1()).expect("valid Arnold parameters"),
    )
}

fn random_poly<R: Rng + ?Sized>(
    r: &mut R,
    degrees: std::ops::RangeInclusive<usize>,
    scale: f64,
) -> TrigPoly {
    let degree = r.gen_range(degrees);
    let coeffs: Vec<f64> = (0..1 + 2 * degree).map(|_| r.gen_range(-scale..scale)).collect();
    TrigPoly::from_vec(&coeffs).expect("finite")
}

/// A random Arnold map, P-family or trigonometric lift of low degree.
pub fn random_family<R: Rng + ?Sized>(r: &mut R) -> FiberFamily {
    match r.gen_range(0..3) {
        0 => {
            let q = random_poly(r, 1..=3, 0.5);
            FiberFamily::arnold(
                r.gen_range(-0.5..1.0),
                r.gen_range(0.0..0.95),
                r.gen_range(0.0..1.0),
                q,
            )
            .expect("alpha below 1")
        }
        1 => loop {
            let raw = random_poly(r, 1..=3, 1.0);
            let d = raw.deriv_bound();
            if d == 0.0 {
                continue;
            }
            let p = raw.scale(r.gen_range(0.1..0.9) / d);
            let h = random_poly(r, 0..=2, 0.3);
            break FiberFamily::pfamily(p, h).expect("derivative bound below 1");
        },
        _ => loop {
            let k = r.gen_range(1..=2);
            let mut modes: Vec<(TrigPoly, TrigPoly)> = (0..k)
                .map(|_| (random_poly(r, 1..=1, 1.0), random_poly(r, 1..=1, 1.0)))
                .collect();
            let osc: f64 = modes
                .iter()
                .enumerate()
                .map(|(i, (a, b))| TAU * (i + 1) as f64 * (a.sup_bound() + b.sup_bound()))
                .sum();
            if osc == 0.0 {
                continue;
            }
            let s = r.gen_range(0.1..0.8) / osc;
            for (a, b) in modes.iter_mut() {
                *a = a.scale(s);
                *b = b.scale(s);
            }
            let c = random_poly(r, 1..=1, 0.3);
            if let Ok(f) = FiberFamily::trig_lift(c, modes) {
                break f;
            }
        },
    }
}

fn structure() -> Result<(bool, String)> {
    let (mut comm, mut inv) = (0.0f64, 0.0f64);
    let mut monotone_failures = 0;
    for k in 0..1000u64 {
        let mut r = rng::stream(1, k);
        let fam = random_family(&mut r);
        for _ in 0..16 {
            let theta: f64 = r.gen();
            let y: f64 = r.gen_range(-2.0..2.0);
            let fy = fam.eval(theta, y);
            comm = comm.max((fam.eval(theta, y + 1.0) - fy - 1.0).abs());
            let dy = r.gen_range(1e-6..0.5);
            if fam.eval(theta, y + dy) <= fy {
                monotone_failures += 1;
            }
            inv = inv.max((fam.inverse(theta, fy)? - y).abs());
        }
    }
    let ok = comm <= 1e-12 && inv <= 1e-10 && monotone_failures == 0;
    Ok((
        ok,
        format!(
            "1000 families: commutation err {comm:.2e}, inverse err {inv:.2e}, monotonicity failures {monotone_failures}"
        ),
    ))
}

fn rotation_oracle() -> Result<(bool, String)> {
    let e = rotation_enclosure(&arnold(1.0 / 3.0, 0.0, 0.0), 10_000, 64, 64, 0.0)?;
    let ok = e.contains(1.0 / 3.0) && e.width() < 1e-8;
    Ok((ok, format!("[{:.12}, {:.12}] width {:.2e}", e.lo, e.hi, e.width())))
}

fn normalization() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let mut r = rng::stream(3, k);
        let map = ForcedMap::new(golden(), random_family(&mut r));
        let n = r.gen_range(1..=8);
        let x = map.base.sample(&mut r);
        let v = derivative_integral_check(&map, &x, n, 4096)?;
        worst = worst.max((v - 1.0).abs());
    }
    Ok((worst < 1e-6, format!("20 families: max |integral - 1| = {worst:.2e}")))
}

fn exponent_oracle() -> Result<(bool, String)> {
    let e = exponent_bounds(&arnold(0.0, 0.5, 0.0), 1024, 4, 1024)?;
    let (up, lo) = (1.5f64.ln(), 0.5f64.ln());
    let ok = e.upper_l_plus >= up - 1e-6
        && (e.upper_l_plus - up).abs() <= 0.02 * up
        && e.lower_l_minus <= lo + 1e-6
        && (e.lower_l_minus - lo).abs() <= 0.02 * lo.abs();
    Ok((
        ok,
        format!(
            "upper L+ {:.6} (log 1.5 = {up:.6}), lower L- {:.6} (log 0.5 = {lo:.6})",
            e.upper_l_plus, e.lower_l_minus
        ),
    ))
}

fn exponent_signs() -> Result<(bool, String)> {
    let mut bad = Vec::new();
    let mut worst_margin = 0.0f64;
    for k in 0..50u64 {
        let mut r = rng::stream(5, k);
        let map = ForcedMap::new(golden(), random_family(&mut r));
        let e = exponent_bounds(&map, 64, 16, 32)?;
        worst_margin = worst_margin.max(e.margin);
        let ok = e.lower_l_minus <= e.margin
            && e.upper_l_plus >= -e.margin
            && e.extremal() <= map.fiber.norm_bound().ln() + e.margin;
        if !ok {
            bad.push(k);
        }
    }
    Ok((
        bad.is_empty(),
        format!("50 families, violations {bad:?}, largest margin {worst_margin:.3}"),
    ))
}

fn lock_oracle() -> Result<(bool, String)> {
    let budget = ClassifyBudget::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.2, 0.5, 0.8] {
        match classify(&arnold(0.0, alpha, 0.0), &budget)? {
            LockClassification::Locked { delta, steps, .. } => {
                ok &= delta >= 1e-3;
                parts.push(format!("alpha={alpha}: LOCKED delta={delta} steps={steps}"));
            }
            other => {
                ok = false;
                parts.push(format!("alpha={alpha}: {}", other.label()));
            }
        }
    }
    let rigid = classify(&arnold(0.3, 0.0, 0.0), &budget)?;
    ok &= rigid.is_unlocked();
    parts.push(format!("rigid tau=0.3: {}", rigid.label()));
    Ok((ok, parts.join(", ")))
}

fn tongue_width() -> Result<(bool, String)> {
    let budget = ClassifyBudget::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.2, 0.5, 0.8] {
        let w = plateau_width(|t| Ok(arnold(t, alpha, 0.0)), 0.0, &budget)?;
        let expect = alpha / PI;
        let rel = (w - expect).abs() / expect;
        ok &= rel <= 0.05;
        parts.push(format!("alpha={alpha}: {w:.5} vs {expect:.5} ({:.2}%)", 100.0 * rel));
    }
    Ok((ok, parts.join(", ")))
}

fn persistence() -> Result<(bool, String)> {
    let ns = [256usize, 512];
    let mut samples = 0;
    let mut firings = 0;
    let mut failures = Vec::new();
    let mut worst_drop_ratio = 0.0f64;
    for k in 0..400u64 {
        if samples == 20 {
            break;
        }
        let mut r = rng::stream(8, k);
        let alpha = r.gen_range(0.1..0.9);
        let beta = if r.gen_bool(0.5) { 0.0 } else { 0.05 };
        let tau = r.gen_range(alpha / TAU + 0.02..1.0 - alpha / TAU - 0.02);
        let map = arnold(tau, alpha, beta);
        let gx = if beta == 0.0 { 4 } else { 64 };
        let stats = |n: usize, eps: f64| displacement_bounds(&map, n, gx, 16, eps);
        let mut fired_here = false;
        for &n in &ns {
            let (s0, s0_double) = (stats(n, 0.0)?, stats(2 * n, 0.0)?);
            for eps in [0.02, 0.01, -0.02, -0.01] {
                let se = stats(n, eps)?;
                let Some(gap) = unlocked_from_stats(&s0, &se, eps) else {
                    continue;
                };
                fired_here = true;
                firings += 1;
                let allowed = 2.0 * (s0.margin + se.margin) / n as f64;
                match unlocked_from_stats(&s0_double, &stats(2 * n, eps)?, eps) {
                    Some(gap2) => {
                        let drop = gap - gap2;
                        worst_drop_ratio = worst_drop_ratio.max(drop / allowed);
                        if drop > allowed {
                            failures.push(format!("sample {k} eps={eps} n={n}: drop {drop:.2e}"));
                        }
                    }
                    None => failures.push(format!("sample {k} eps={eps} n={n}: lost at 2n")),
                }
            }
        }
        if fired_here {
            samples += 1;
        }
    }
    let ok = samples == 20 && failures.is_empty();
    Ok((
        ok,
        format!(
            "{samples} unlocked samples, {firings} firings, worst drop/allowed {worst_drop_ratio:.3}{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!(", failures: {}", failures.join("; "))
            }
        ),
    ))
}

fn scan_determinism() -> Result<(bool, String)> {
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let one = ScanConfig {
        workers: 1,
        ..ScanConfig::default()
    };
    let many = ScanConfig { workers, ..one.clone() };
    let a = tongue_scan(&one)?;
    let b = tongue_scan(&many)?;
    let identical = a.to_csv() == b.to_csv()
        && a.to_pgm() == b.to_pgm()
        && a.metadata_json(false) == b.metadata_json(false);
    let h = one.tau_step();
    let mut off_rows = Vec::new();
    for j in 0..one.alpha_count {
        let edge = one.alpha(j) / TAU;
        match locked_run_end(a.row(j)) {
            Some(e) if (one.tau(e) - edge).abs() <= h => {}
            other => off_rows.push(format!("alpha={:.3}: run end {other:?}", one.alpha(j))),
        }
    }
    let ok = identical && off_rows.is_empty();
    Ok((
        ok,
        format!(
            "1 vs {workers} workers identical: {identical}; rows off boundary: {}",
            if off_rows.is_empty() {
                "none".to_string()
            } else {
                off_rows.join("; ")
            }
        ),
    ))
}

/// Classification budget for forced maps in the probe check: a finer base
/// grid keeps the per-step base margin below the shift sizes.
fn probe_budget() -> ClassifyBudget {
    ClassifyBudget {
        n_list: vec![256, 1024],
        eps_list: vec![0.02, 0.01],
        grid_x: 256,
        grid_y: 16,
        ..ClassifyBudget::default()
    }
}

fn probe_soundness() -> Result<(bool, String)> {
    let budget = probe_budget();
    let mut ok = true;
    let mut parts = Vec::new();

    let setups = [
        (0.082, 0.5, 0.1, TrigPoly::zero()),
        (0.115, 0.7, 0.1, TrigPoly::cos1()),
        (0.05, 0.3, 0.05, TrigPoly::sin1()),
    ];
    let mut found = 0;
    for (k, (tau, alpha, beta, q0)) in setups.iter().enumerate() {
        let cfg = LockSearchConfig {
            seed: k as u64,
            ..LockSearchConfig::default()
        };
        let report = lock_search(&golden(), *tau, *alpha, *beta, q0, &cfg, &budget)?;
        if let Some(q) = &report.found {
            found += 1;
            let map = ForcedMap::new(golden(), FiberFamily::arnold(*tau, *alpha, *beta, q.clone())?);
            let again = classify(&map, &budget)?;
            ok &= again.is_locked();
        }
        parts.push(format!(
            "lock search {k}: {} after {} trials",
            report.trial.map_or("none".to_string(), |t| format!("trial {t}")),
            report.trials_run
        ));
    }
    parts.push(format!("success rate {found}/{}", setups.len()));

    let starts = [(0.3, 0.3, 0.2), (0.41, 0.4, 0.2)];
    for (k, (tau, alpha, beta)) in starts.iter().enumerate() {
        let fam = FiberFamily::arnold(*tau, *alpha, *beta, TrigPoly::cos1())?;
        let cfg = ExponentSearchConfig {
            seed: k as u64,
            ..ExponentSearchConfig::default()
        };
        let report = exponent_minimize(&golden(), &fam, &cfg, &budget)?;
        let mut prev = objective(&report.start);
        for &v in &report.trace {
            ok &= v <= prev;
            prev = v;
        }
        for fam in &report.accepted {
            ok &= classify(&ForcedMap::new(golden(), fam.clone()), &budget)?.is_unlocked();
        }
        parts.push(format!(
            "descent {k}: {:.4} -> {:.4} in {} accepted steps",
            objective(&report.start),
            objective(&report.last),
            report.trace.len()
        ));
    }
    Ok((ok, parts.join(", ")))
}

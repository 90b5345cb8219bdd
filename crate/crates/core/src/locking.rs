//! Mode-locking and unlocking certificates.
//!
//! A map is mode-locked when `ρ(F − ε) = ρ(F) = ρ(F + ε)` for some `ε > 0`.
//! Two certificates decide this from finite computations:
//!
//! * **unlocked**: if the lowest `n`-step displacement of `F + ε` beats the
//!   highest one of `F` (both widened by their margins), then
//!   `ρ(F + ε) > ρ(F)`, so the rotation-number plateau through `F` is
//!   narrower than `ε`;
//! * **locked**: an open strip `R` around a graph over the base with
//!   `F_δ^s(R̄) ⊂ R` for all `|δ'| ≤ δ` pins the rotation number of every
//!   `F_δ'`, so `F` is mode-locked.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::BaseMap;
use crate::error::{Error, Result};
use crate::fiber::ForcedMap;
use crate::numeric::wrap_half;
use crate::rotation::{displacement_bounds, DisplacementStats, DEFAULT_GRID};

/// A band `(c(x) − r(x), c(x) + r(x))` over the circle base, given by node
/// values at `x_i = i / N` and interpolated linearly in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    centers: Vec<f64>,
    radii: Vec<f64>,
}

impl Strip {
    pub fn new(centers: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        if centers.len() != radii.len() || centers.len() < 2 {
            return Err(Error::Precondition(
                "strip needs matching center/radius vectors with at least 2 nodes".into(),
            ));
        }
        if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r < 0.5)) {
            return Err(Error::Precondition(format!(
                "strip radius {r} outside (0, 0.5)"
            )));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::Precondition("strip centers must be finite".into()));
        }
        let n = centers.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if wrap_half(centers[j] - centers[i]).abs() >= 0.25
                || (radii[j] - radii[i]).abs() >= 0.25
            {
                return Err(Error::Precondition(format!(
                    "strip jumps by a quarter turn or more between nodes {i} and {j}"
                )));
            }
        }
        Ok(Strip { centers, radii })
    }

    /// Uniform band around a constant graph.
    pub fn constant(center: f64, radius: f64, nodes: usize) -> Result<Self> {
        Self::new(vec![center; nodes], vec![radius; nodes])
    }

    pub fn nodes(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Mesh width `1 / N`.
    pub fn mesh(&self) -> f64 {
        1.0 / self.nodes() as f64
    }

    /// Largest slope of either boundary curve, differences taken mod 1.
    pub fn slope_bound(&self) -> f64 {
        let n = self.nodes();
        (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                let dc = wrap_half(self.centers[j] - self.centers[i]);
                let dr = self.radii[j] - self.radii[i];
                (dc + dr).abs().max((dc - dr).abs())
            })
            .fold(0.0, f64::max)
            * n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum LockClassification {
    Locked {
        delta: f64,
        strip: Strip,
        steps: usize,
    },
    /// `ρ(F + eps) > ρ(F)`.
    UnlockedUp { eps: f64, n: usize, gap_per_step: f64 },
    /// `ρ(F − |eps|) < ρ(F)`.
    UnlockedDown { eps: f64, n: usize, gap_per_step: f64 },
    Undecided { diagnostics: String },
}

impl LockClassification {
    /// `LOCKED`, `UNLOCKED_UP`, `UNLOCKED_DOWN` or `UNDECIDED`.
    pub fn label(&self) -> &'static str {
        match self {
            LockClassification::Locked { .. } => "LOCKED",
            LockClassification::UnlockedUp { .. } => "UNLOCKED_UP",
            LockClassification::UnlockedDown { .. } => "UNLOCKED_DOWN",
            LockClassification::Undecided { .. } => "UNDECIDED",
        }
    }

    pub fn is_locked(&self) -> bool {
        matches!(self, LockClassification::Locked { .. })
    }

    pub fn is_unlocked(&self) -> bool {
        matches!(
            self,
            LockClassification::UnlockedUp { .. } | LockClassification::UnlockedDown { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyBudget {
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub grid_x: usize,
    pub grid_y: usize,
    /// Iterations used to push the initial graph toward an attractor.
    pub transient: usize,
    /// Base nodes of candidate strips.
    pub x_nodes: usize,
    pub radii: Vec<f64>,
    /// Return times tried for strip containment.
    pub strip_steps: Vec<usize>,
    /// Shift sizes tried for a strip, largest first.
    pub deltas: Vec<f64>,
}

impl Default for ClassifyBudget {
    fn default() -> Self {
        ClassifyBudget {
            n_list: vec![512, 2048, 8192],
            eps_list: vec![0.02, 0.01, 0.005, 0.002],
            grid_x: DEFAULT_GRID,
            grid_y: DEFAULT_GRID,
            transient: 512,
            x_nodes: 1024,
            radii: vec![0.2, 0.1, 0.05, 0.02, 0.01],
            strip_steps: vec![1, 8, 32],
            deltas: vec![
                1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4, 5e-5, 2e-5, 1e-5,
            ],
        }
    }
}

impl ClassifyBudget {
    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Error::Precondition(format!("budget list {name} is empty"));
        if self.n_list.is_empty() {
            return Err(empty("n_list"));
        }
        if self.eps_list.is_empty() {
            return Err(empty("eps_list"));
        }
        if self.radii.is_empty() {
            return Err(empty("radii"));
        }
        if self.strip_steps.is_empty() {
            return Err(empty("strip_steps"));
        }
        if self.deltas.is_empty() {
            return Err(empty("deltas"));
        }
        if self.n_list.iter().any(|&n| n < 2) {
            return Err(Error::Precondition("n_list entries must be at least 2".into()));
        }
        if self.eps_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::Precondition("eps_list entries must be positive".into()));
        }
        if self.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Precondition("deltas must be positive".into()));
        }
        if self.strip_steps.contains(&0) {
            return Err(Error::Precondition("strip steps must be positive".into()));
        }
        if self.x_nodes < 2 {
            return Err(Error::Precondition("x_nodes must be at least 2".into()));
        }
        Ok(())
    }
}

/// Gap per step when `stats_eps` (computed at shift `eps`) separates from
/// `stats0`. Flagged stats never certify.
pub fn unlocked_from_stats(
    stats0: &DisplacementStats,
    stats_eps: &DisplacementStats,
    eps: f64,
) -> Option<f64> {
    if stats0.flagged() || stats_eps.flagged() || stats0.n != stats_eps.n {
        return None;
    }
    let n = stats0.n as f64;
    let gap = if eps > 0.0 {
        stats_eps.lower() - stats0.upper()
    } else {
        stats0.lower() - stats_eps.upper()
    };
    (gap > 0.0).then_some(gap / n)
}

/// Certifies `ρ(F_eps) ≠ ρ(F)` (above for `eps > 0`, below for `eps < 0`)
/// and returns the displacement gap per step.
pub fn unlocked_certificate(
    map: &ForcedMap,
    eps: f64,
    n: usize,
    grid_x: usize,
    grid_y: usize,
) -> Result<Option<f64>> {
    if !(eps != 0.0 && eps.is_finite()) {
        return Err(Error::Precondition("eps must be nonzero".into()));
    }
    if n < 2 {
        return Err(Error::Precondition("n must be at least 2".into()));
    }
    let stats0 = displacement_bounds(map, n, grid_x, grid_y, 0.0)?;
    let stats_eps = displacement_bounds(map, n, grid_x, grid_y, eps)?;
    Ok(unlocked_from_stats(&stats0, &stats_eps, eps))
}

fn circle_omega(base: &BaseMap) -> Result<f64> {
    match base {
        BaseMap::Rotation { omega } if omega.len() == 1 => Ok(omega[0]),
        _ => Err(Error::Unsupported(format!(
            "strip certificates need a rotation of the circle, got {}",
            base.kind()
        ))),
    }
}

/// Linear interpolation of a mod-1 graph given at nodes `i / N`.
fn interpolate(values: &[f64], x: f64) -> f64 {
    let n = values.len();
    let t = x.rem_euclid(1.0) * n as f64;
    let i = (t.floor() as usize).min(n - 1);
    let s = t - i as f64;
    let a = values[i];
    a + s * wrap_half(values[(i + 1) % n] - a)
}

/// Pushes the graph `w ≡ 0.5` forward `transient` times and wraps a band of
/// radius `radius0` around the result. Only a candidate.
pub fn find_candidate_strip(
    map: &ForcedMap,
    transient: usize,
    x_nodes: usize,
    radius0: f64,
) -> Result<Strip> {
    let omega = circle_omega(&map.base)?;
    if x_nodes < 2 {
        return Err(Error::Precondition("x_nodes must be at least 2".into()));
    }
    band(&pushed_graph(map, omega, transient, x_nodes), radius0)
}

fn pushed_graph(map: &ForcedMap, omega: f64, transient: usize, x_nodes: usize) -> Vec<f64> {
    let h = 1.0 / x_nodes as f64;
    let mut graph = vec![0.5; x_nodes];
    for _ in 0..transient {
        graph = (0..x_nodes)
            .map(|j| {
                let x = (j as f64 * h - omega).rem_euclid(1.0);
                let w = interpolate(&graph, x);
                let y = map.fiber.eval(x, w);
                y - y.floor()
            })
            .collect();
    }
    graph
}

fn band(graph: &[f64], radius0: f64) -> Result<Strip> {
    if !(radius0 > 0.0 && radius0 < 0.5) {
        return Err(Error::Precondition(format!(
            "radius {radius0} outside (0, 0.5)"
        )));
    }
    let n = graph.len();
    // smooth out quarter-turn jumps the guard would reject
    let mut centers = Vec::with_capacity(n);
    centers.push(graph[0]);
    for j in 1..n {
        let prev = centers[j - 1];
        let step = wrap_half(graph[j] - prev).clamp(-0.24, 0.24);
        centers.push(prev + step);
    }
    let centers: Vec<f64> = centers.into_iter().map(|c| c - c.floor()).collect();
    match Strip::new(centers, vec![radius0; n]) {
        Ok(s) => Ok(s),
        // a graph that still winds wildly: fall back to a flat band
        Err(_) => Strip::constant(graph[0], radius0, n),
    }
}

/// Outcome of checking one strip at one shift size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripCheck {
    /// Node with the least room to spare.
    pub worst_node: usize,
    /// Room at that node before interpolation error.
    pub slack: f64,
    /// Interpolation error budget at that node.
    pub budget: f64,
}

impl StripCheck {
    pub fn passed(&self) -> bool {
        self.slack > self.budget
    }
}

/// Checks `F_{δ'}^steps(R̄) ⊂ R` for every `|δ'| ≤ delta`.
///
/// For a base point `x` within `h/2` of node `x_i`, monotonicity gives
/// `F^s_{x,δ'}(y) ≤ F^s_{x_i, δ + λh/2}(c_i + r_i + S h/2)` for every `y` in
/// the closed fiber interval (`λ` the base Lipschitz constant of the lift,
/// `S` the boundary slope bound), and symmetrically from below. The image
/// base point lies within `d + h/2` of the node `x_j` closest to
/// `g^s(x_i)`, where the band is at least `S (d + h/2)` narrower than at
/// `x_j`.
pub fn strip_check(map: &ForcedMap, strip: &Strip, delta: f64, steps: usize) -> Result<StripCheck> {
    let omega = circle_omega(&map.base)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Precondition("delta must be positive".into()));
    }
    if steps == 0 {
        return Err(Error::Precondition("steps must be positive".into()));
    }
    let n = strip.nodes();
    let h = strip.mesh();
    let slope = strip.slope_bound();
    let lambda = if map.fiber.depends_on_base() {
        map.fiber.base_lipschitz()
    } else {
        0.0
    };
    let shift = delta + 0.5 * lambda * h;
    let fp = 64.0 * f64::EPSILON * (steps as f64 + 2.0);
    let end_phase = (0..steps).fold(0.0, |a: f64, _| (a + omega).rem_euclid(1.0));

    let per_node: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x0 = i as f64 * h;
            let c = strip.centers[i];
            let r = strip.radii[i];
            let mut hi = c + r + 0.5 * slope * h;
            let mut lo = c - r - 0.5 * slope * h;
            let mut x = x0;
            for _ in 0..steps {
                hi = map.fiber.eval(x, hi) + shift;
                lo = map.fiber.eval(x, lo) - shift;
                x = (x + omega).rem_euclid(1.0);
            }
            let target = (x0 + end_phase).rem_euclid(1.0) * n as f64;
            let j = target.round() as usize % n;
            let d = wrap_half((target - target.round()) / n as f64).abs();
            let (cj, rj) = (strip.centers[j], strip.radii[j]);
            let k = (0.5 * (hi + lo) - cj).round();
            let room = (cj + k + rj - hi).min(lo - (cj + k - rj)) - fp;
            (room, slope * (d + 0.5 * h))
        })
        .collect();

    let (worst_node, &(slack, budget)) = per_node
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 .0 - a.1 .1).total_cmp(&(b.1 .0 - b.1 .1)))
        .expect("strip has nodes");
    Ok(StripCheck {
        worst_node,
        slack,
        budget,
    })
}

/// `Locked` when the strip passes [`strip_check`].
pub fn locked_certificate(
    map: &ForcedMap,
    strip: &Strip,
    delta: f64,
    steps: usize,
) -> Result<Option<LockClassification>> {
    let check = strip_check(map, strip, delta, steps)?;
    Ok(check.passed().then(|| LockClassification::Locked {
        delta,
        strip: strip.clone(),
        steps,
    }))
}

/// Classification with the evidence gathered on the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub class: LockClassification,
    pub diagnostics: Vec<String>,
}

/// Strip search only: radii in budget order, then return times, keeping the
/// largest passing delta.
pub fn search_locked(
    map: &ForcedMap,
    budget: &ClassifyBudget,
    diagnostics: &mut Vec<String>,
) -> Result<Option<LockClassification>> {
    if !map.base.is_circle_rotation() {
        diagnostics.push(format!(
            "strip certificates unsupported over {} bases",
            map.base.kind()
        ));
        return Ok(None);
    }
    let smallest = budget.deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut deltas = budget.deltas.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    let mut best_miss: Option<(f64, usize, StripCheck)> = None;
    let omega = circle_omega(&map.base)?;
    let graph = pushed_graph(map, omega, budget.transient, budget.x_nodes);
    for &radius in &budget.radii {
        let strip = band(&graph, radius)?;
        for &steps in &budget.strip_steps {
            let weakest = strip_check(map, &strip, smallest, steps)?;
            if !weakest.passed() {
                let excess = weakest.slack - weakest.budget;
                if best_miss.is_none_or(|(e, ..)| excess > e) {
                    best_miss = Some((excess, steps, weakest));
                }
                continue;
            }
            for &delta in &deltas {
                if let Some(lock) = locked_certificate(map, &strip, delta, steps)? {
                    return Ok(Some(lock));
                }
            }
        }
    }
    if let Some((_, steps, c)) = best_miss {
        diagnostics.push(format!(
            "no strip certified; closest: steps={steps} node={} slack={:.3e} budget={:.3e}",
            c.worst_node, c.slack, c.budget
        ));
    }
    Ok(None)
}

pub fn classify(map: &ForcedMap, budget: &ClassifyBudget) -> Result<LockClassification> {
    Ok(classify_detailed(map, budget)?.class)
}

/// Strip certificates first; then unlocked certificates over
/// `eps_list × n_list`, trying `+eps` before `−eps`.
pub fn classify_detailed(map: &ForcedMap, budget: &ClassifyBudget) -> Result<ClassifyReport> {
    budget.validate()?;
    let mut diagnostics = Vec::new();
    let (gx, gy) = (budget.grid_x, budget.grid_y);

    if let Some(lock) = search_locked(map, budget, &mut diagnostics)? {
        let LockClassification::Locked { delta, .. } = &lock else {
            unreachable!()
        };
        let n = budget.n_list[0];
        let stats0 = displacement_bounds(map, n, gx, gy, 0.0)?;
        for eps in [*delta, -*delta] {
            let stats = displacement_bounds(map, n, gx, gy, eps)?;
            if let Some(gap) = unlocked_from_stats(&stats0, &stats, eps) {
                diagnostics.push(format!(
                    "inconsistent: strip certified with delta={delta} but unlocked fires at eps={eps} n={n} gap={gap:.3e}"
                ));
                return Ok(ClassifyReport {
                    class: LockClassification::Undecided {
                        diagnostics: diagnostics.join("; "),
                    },
                    diagnostics,
                });
            }
        }
        return Ok(ClassifyReport {
            class: lock,
            diagnostics,
        });
    }

    let mut stats0: Vec<Option<DisplacementStats>> = vec![None; budget.n_list.len()];
    for &eps in &budget.eps_list {
        for (slot, &n) in budget.n_list.iter().enumerate() {
            if stats0[slot].is_none() {
                stats0[slot] = Some(displacement_bounds(map, n, gx, gy, 0.0)?);
            }
            let s0 = stats0[slot].as_ref().expect("filled above");
            if s0.flagged() {
                diagnostics.push(format!("n={n}: margin flagged ({:.3e})", s0.margin));
                continue;
            }
            let up = unlocked_from_stats(s0, &displacement_bounds(map, n, gx, gy, eps)?, eps);
            let down = unlocked_from_stats(s0, &displacement_bounds(map, n, gx, gy, -eps)?, -eps);
            if up.is_none() && down.is_none() {
                continue;
            }
            let show = |g: Option<f64>| g.map_or("none".to_string(), |g| format!("{g:.6e}"));
            diagnostics.push(format!(
                "eps={eps} n={n}: up gap={} down gap={}",
                show(up),
                show(down)
            ));
            let class = match (up, down) {
                (Some(gap_per_step), _) => LockClassification::UnlockedUp {
                    eps,
                    n,
                    gap_per_step,
                },
                (None, Some(gap_per_step)) => LockClassification::UnlockedDown {
                    eps: -eps,
                    n,
                    gap_per_step,
                },
                (None, None) => unreachable!(),
            };
            return Ok(ClassifyReport { class, diagnostics });
        }
    }
    diagnostics.push("no certificate within budget".into());
    Ok(ClassifyReport {
        class: LockClassification::Undecided {
            diagnostics: diagnostics.join("; "),
        },
        diagnostics,
    })
}

/// Resolution of [`plateau_width`].
pub const PLATEAU_RESOLUTION: f64 = 1e-4;

/// Two-sided width of the set of `τ` around `tau0` on which `build(τ)`
/// carries a strip certificate.
pub fn plateau_width<B>(build: B, tau0: f64, budget: &ClassifyBudget) -> Result<f64>
where
    B: Fn(f64) -> Result<ForcedMap>,
{
    budget.validate()?;
    let locked = |t: f64| -> Result<bool> {
        let mut sink = Vec::new();
        Ok(search_locked(&build(t)?, budget, &mut sink)?.is_some())
    };
    if !locked(tau0)? {
        return Err(Error::Precondition(format!(
            "family at tau0={tau0} is not certified locked"
        )));
    }
    let mut width = 0.0;
    for sign in [1.0, -1.0] {
        let mut inside = 0.0;
        let mut step: f64 = 0.01;
        let outside = loop {
            let t = inside + step;
            if t > 1.0 {
                break None;
            }
            if locked(tau0 + sign * t)? {
                inside = t;
                step *= 2.0;
            } else {
                break Some(t);
            }
        };
        let Some(mut outside) = outside else {
            width += 1.0;
            continue;
        };
        while outside - inside > PLATEAU_RESOLUTION {
            let mid = 0.5 * (inside + outside);
            if locked(tau0 + sign * mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        width += inside;
    }
    Ok(width)
}

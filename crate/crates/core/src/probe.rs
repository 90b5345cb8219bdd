//! Seeded perturbation probes: searching for mode-locked forcings near a
//! given one, and descending the extremal Lyapunov exponents while staying
//! unlocked.

use rand::distributions::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::BaseMap;
use crate::error::{Error, Result};
use crate::fiber::{FiberFamily, ForcedMap};
use crate::locking::{classify, ClassifyBudget, LockClassification};
use crate::lyapunov::{exponent_bounds, ExponentEstimate};
use crate::rng;
use crate::trig::TrigPoly;

/// Highest perturbed mode by default.
pub const DEFAULT_MODES: usize = 8;

/// Trials classified per parallel batch in [`lock_search`].
const BATCH: usize = 8;

/// `q` plus independent uniform noise in `[-radius, radius]` on the constant
/// and the cosine/sine coefficients of modes `1..=modes`.
pub fn perturb(q: &TrigPoly, radius: f64, modes: usize, seed: u64, index: u64) -> TrigPoly {
    let mut coeffs = q.padded(modes).to_vec();
    let mut r = rng::stream(seed, index);
    let noise = Uniform::new_inclusive(-radius, radius);
    for c in coeffs.iter_mut().take(1 + 2 * modes) {
        *c += noise.sample(&mut r);
    }
    TrigPoly::from_vec(&coeffs).expect("finite coefficients")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockSearchConfig {
    pub radius: f64,
    pub trials: usize,
    pub modes: usize,
    pub seed: u64,
}

impl Default for LockSearchConfig {
    fn default() -> Self {
        LockSearchConfig {
            radius: 0.1,
            trials: 32,
            modes: DEFAULT_MODES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockSearchReport {
    /// Forcing of the first re-verified locked trial.
    pub found: Option<TrigPoly>,
    pub trial: Option<usize>,
    pub classification: Option<LockClassification>,
    pub trials_run: usize,
    pub unlocked: usize,
    /// Trials that were neither locked nor unlocked.
    pub near_misses: Vec<usize>,
    /// Trials whose strip did not survive the fresh re-check.
    pub failed_reverification: Vec<usize>,
}

/// Samples forcings around `q0` (trial 0 is `q0` itself) and returns the
/// lowest-index trial whose map classifies `Locked` twice in a row.
#[allow(clippy::too_many_arguments)]
pub fn lock_search(
    base: &BaseMap,
    tau: f64,
    alpha: f64,
    beta: f64,
    q0: &TrigPoly,
    cfg: &LockSearchConfig,
    budget: &ClassifyBudget,
) -> Result<LockSearchReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!(
            "lock search needs alpha in (0, 1), got {alpha}"
        )));
    }
    if cfg.trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
        return Err(Error::Precondition("radius must be positive".into()));
    }
    budget.validate()?;
    let candidate = |t: usize| -> TrigPoly {
        if t == 0 {
            q0.clone()
        } else {
            perturb(q0, cfg.radius, cfg.modes, cfg.seed, t as u64)
        }
    };
    let build = |q: TrigPoly| -> Result<ForcedMap> {
        Ok(ForcedMap::new(
            base.clone(),
            FiberFamily::arnold(tau, alpha, beta, q)?,
        ))
    };

    let mut report = LockSearchReport {
        found: None,
        trial: None,
        classification: None,
        trials_run: 0,
        unlocked: 0,
        near_misses: Vec::new(),
        failed_reverification: Vec::new(),
    };
    let mut start = 0;
    while start < cfg.trials {
        let end = (start + BATCH).min(cfg.trials);
        let outcomes: Vec<Result<LockClassification>> = (start..end)
            .into_par_iter()
            .map(|t| classify(&build(candidate(t))?, budget))
            .collect();
        for (t, outcome) in (start..end).zip(outcomes) {
            report.trials_run += 1;
            match outcome? {
                class @ LockClassification::Locked { .. } => {
                    let q = candidate(t);
                    let again = classify(&build(q.clone())?, budget)?;
                    if again.is_locked() && again == class {
                        report.found = Some(q);
                        report.trial = Some(t);
                        report.classification = Some(again);
                        return Ok(report);
                    }
                    report.failed_reverification.push(t);
                }
                c if c.is_unlocked() => report.unlocked += 1,
                _ => report.near_misses.push(t),
            }
        }
        start = end;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSearchConfig {
    pub radius: f64,
    pub iterations: usize,
    pub modes: usize,
    pub seed: u64,
    pub n: usize,
    pub grid_x: usize,
    pub grid_y: usize,
}

impl Default for ExponentSearchConfig {
    fn default() -> Self {
        ExponentSearchConfig {
            radius: 0.05,
            iterations: 16,
            modes: DEFAULT_MODES,
            seed: 0,
            n: 8,
            grid_x: 1024,
            grid_y: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSearchReport {
    pub family: FiberFamily,
    pub start: ExponentEstimate,
    pub last: ExponentEstimate,
    /// Objective after each accepted step.
    pub trace: Vec<f64>,
    /// Family after each accepted step.
    pub accepted: Vec<FiberFamily>,
    pub proposals: usize,
    /// Classification of the returned family.
    pub classification: LockClassification,
}

/// `max(upper L_+, −lower L_-)`.
pub fn objective(e: &ExponentEstimate) -> f64 {
    e.extremal()
}

/// Hill descent on [`objective`] over perturbations of the additive forcing.
/// A proposal is accepted only if it strictly lowers the objective and the
/// perturbed map still classifies as unlocked.
pub fn exponent_minimize(
    base: &BaseMap,
    fam0: &FiberFamily,
    cfg: &ExponentSearchConfig,
    budget: &ClassifyBudget,
) -> Result<ExponentSearchReport> {
    if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
        return Err(Error::Precondition("radius must be positive".into()));
    }
    if cfg.iterations == 0 {
        return Err(Error::Precondition("iterations must be at least 1".into()));
    }
    let map0 = ForcedMap::new(base.clone(), fam0.clone());
    let class0 = classify(&map0, budget)?;
    if !class0.is_unlocked() {
        return Err(Error::Precondition(format!(
            "starting family must classify unlocked, got {}",
            class0.label()
        )));
    }
    let start = exponent_bounds(&map0, cfg.n, cfg.grid_x, cfg.grid_y)?;
    let mut current = fam0.clone();
    let mut best = start.clone();
    let mut class = class0;
    let mut trace = Vec::new();
    let mut accepted = Vec::new();
    for it in 0..cfg.iterations {
        let forcing = perturb(current.forcing(), cfg.radius, cfg.modes, cfg.seed, it as u64);
        let Ok(fam) = current.with_forcing(forcing) else {
            continue;
        };
        let map = ForcedMap::new(base.clone(), fam.clone());
        let est = exponent_bounds(&map, cfg.n, cfg.grid_x, cfg.grid_y)?;
        let gain = objective(&best) - objective(&est);
        if gain.is_nan() || gain <= 1e-12 {
            continue;
        }
        let c = classify(&map, budget)?;
        if c.is_unlocked() {
            trace.push(objective(&est));
            accepted.push(fam.clone());
            current = fam;
            best = est;
            class = c;
        }
    }
    Ok(ExponentSearchReport {
        family: current,
        start,
        last: best,
        trace,
        accepted,
        proposals: cfg.iterations,
        classification: class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::GOLDEN_CONJUGATE;

    fn base() -> BaseMap {
        BaseMap::rotation(&[GOLDEN_CONJUGATE]).unwrap()
    }

    fn quick_budget() -> ClassifyBudget {
        ClassifyBudget {
            n_list: vec![256, 1024],
            eps_list: vec![0.02, 0.01],
            grid_x: 256,
            grid_y: 16,
            ..ClassifyBudget::default()
        }
    }

    #[test]
    fn perturbation_stays_in_radius() {
        let q = TrigPoly::cos1();
        let p = perturb(&q, 0.1, 4, 9, 2);
        assert_eq!(p.degree(), 4);
        assert!(p.coeff_distance(&q) <= 0.1);
        assert_eq!(p, perturb(&q, 0.1, 4, 9, 2));
        assert_ne!(p, perturb(&q, 0.1, 4, 9, 3));
    }

    #[test]
    fn locked_start_returns_q0() {
        let cfg = LockSearchConfig::default();
        let q0 = TrigPoly::cos1();
        let r = lock_search(&base(), 0.0, 0.5, 0.05, &q0, &cfg, &quick_budget()).unwrap();
        assert_eq!(r.found, Some(q0));
        assert_eq!(r.trial, Some(0));
        assert_eq!(r.trials_run, 1);
    }

    #[test]
    fn alpha_zero_rejected() {
        let cfg = LockSearchConfig::default();
        let err = lock_search(&base(), 0.0, 0.0, 0.5, &TrigPoly::cos1(), &cfg, &quick_budget());
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn search_finds_lock_near_boundary_and_reverifies() {
        let cfg = LockSearchConfig {
            radius: 0.05,
            trials: 16,
            seed: 3,
            ..LockSearchConfig::default()
        };
        let budget = quick_budget();
        // just outside the unforced tongue: a constant forcing shift can
        // move the map back inside
        let r = lock_search(&base(), 0.085, 0.5, 0.2, &TrigPoly::zero(), &cfg, &budget).unwrap();
        if let Some(q) = &r.found {
            let map = ForcedMap::new(base(), FiberFamily::arnold(0.085, 0.5, 0.2, q.clone()).unwrap());
            assert!(classify(&map, &budget).unwrap().is_locked());
        }
        assert!(r.trials_run >= 1);
    }

    #[test]
    fn rigid_start_has_nothing_to_reduce() {
        let fam = FiberFamily::arnold(0.3, 0.0, 0.5, TrigPoly::cos1()).unwrap();
        let cfg = ExponentSearchConfig {
            iterations: 4,
            ..ExponentSearchConfig::default()
        };
        let r = exponent_minimize(&base(), &fam, &cfg, &quick_budget()).unwrap();
        assert!(r.trace.is_empty());
        assert_eq!(r.family, fam);
    }

    #[test]
    fn descent_trace_is_monotone_and_unlocked() {
        let fam = FiberFamily::arnold(0.3, 0.6, 0.3, TrigPoly::cos1()).unwrap();
        let cfg = ExponentSearchConfig {
            iterations: 6,
            n: 64,
            grid_x: 16,
            grid_y: 32,
            seed: 11,
            ..ExponentSearchConfig::default()
        };
        let budget = quick_budget();
        let r = exponent_minimize(&base(), &fam, &cfg, &budget).unwrap();
        let mut prev = objective(&r.start);
        for &v in &r.trace {
            assert!(v < prev);
            prev = v;
        }
        assert!(r.classification.is_unlocked());
        let map = ForcedMap::new(base(), r.family.clone());
        assert!(classify(&map, &budget).unwrap().is_unlocked());
    }

    #[test]
    fn locked_start_rejected() {
        let fam = FiberFamily::arnold(0.0, 0.5, 0.0, TrigPoly::cos1()).unwrap();
        let r = exponent_minimize(&base(), &fam, &ExponentSearchConfig::default(), &quick_budget());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}

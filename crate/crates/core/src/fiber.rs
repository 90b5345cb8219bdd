//! Degree-one circle lifts `F_x` and the skew products they generate.
//!
//! Three families are supported:
//!
//! * [`FiberKind::Arnold`]: `y + τ + (α/2π) sin(2πy) + β q(θ)`,
//! * [`FiberKind::PFamily`]: `y + P(y) + h(θ)` with `‖P′‖ < 1`,
//! * [`FiberKind::TrigLift`]: `y + c(θ) + Σ_k a_k(θ) cos(2πky) + b_k(θ) sin(2πky)`,
//!
//! where `θ` is the base phase ([`BaseMap::phase`]). Fiber values are
//! carried as unreduced lift values; orbit routines split off the integer
//! winding so the fractional part stays in `[0, 1)`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::base::{BaseMap, BasePoint};
use crate::error::{Error, Result};
use crate::trig::TrigPoly;

/// Nodes of the grid used to validate trig lifts.
const VALIDATION_THETA: usize = 64;
const VALIDATION_Y: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FiberKind {
    Arnold {
        tau: f64,
        alpha: f64,
        beta: f64,
        q: TrigPoly,
    },
    PFamily {
        p: TrigPoly,
        forcing: TrigPoly,
    },
    TrigLift {
        constant: TrigPoly,
        /// `(a_k, b_k)` for `k = 1..=K`.
        modes: Vec<(TrigPoly, TrigPoly)>,
    },
}

/// Coefficient-derived bounds, all safe overestimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftBounds {
    /// Upper bound on `sup DF_x(y)`.
    pub deriv_sup: f64,
    /// Lower bound on `inf DF_x(y)`, strictly positive.
    pub deriv_inf: f64,
    /// Upper bound on `sup |D²F_x(y)|`.
    pub second: f64,
    /// Upper bound on `sup |∂_θ F_x(y)|`.
    pub base_lipschitz: f64,
    /// Upper bound on `sup |∂_θ ∂_y F_x(y)|`.
    pub mixed: f64,
    /// `max(sup DF, sup D(F⁻¹))`.
    pub norm_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberFamily {
    kind: FiberKind,
    bounds: LiftBounds,
}

impl FiberFamily {
    /// Forced Arnold family. `alpha` must lie in `[0, 1)`.
    pub fn arnold(tau: f64, alpha: f64, beta: f64, q: TrigPoly) -> Result<Self> {
        if !(tau.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidFamily("tau and beta must be finite".into()));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidFamily(format!(
                "alpha = {alpha} is outside [0, 1)"
            )));
        }
        let bounds = LiftBounds {
            deriv_sup: 1.0 + alpha,
            deriv_inf: 1.0 - alpha,
            second: TAU * alpha,
            base_lipschitz: beta.abs() * q.deriv_bound(),
            mixed: 0.0,
            norm_bound: (1.0 + alpha).max(1.0 / (1.0 - alpha)),
        };
        Ok(FiberFamily {
            kind: FiberKind::Arnold {
                tau,
                alpha,
                beta,
                q,
            },
            bounds,
        })
    }

    /// Unforced Arnold map (`β = 0`).
    pub fn arnold_unforced(tau: f64, alpha: f64) -> Result<Self> {
        Self::arnold(tau, alpha, 0.0, TrigPoly::zero())
    }

    /// `y ↦ y + P(y) + h(θ)`. Rejects constant `P` and `‖P′‖ ≥ 1`.
    pub fn pfamily(p: TrigPoly, forcing: TrigPoly) -> Result<Self> {
        let d = p.deriv_bound();
        if p.is_constant() {
            return Err(Error::InvalidFamily("P must be non-constant".into()));
        }
        if d >= 1.0 {
            return Err(Error::InvalidFamily(format!(
                "derivative bound of P is {d}, must be < 1"
            )));
        }
        let bounds = LiftBounds {
            deriv_sup: 1.0 + d,
            deriv_inf: 1.0 - d,
            second: p.deriv2_bound(),
            base_lipschitz: forcing.deriv_bound(),
            mixed: 0.0,
            norm_bound: (1.0 + d).max(1.0 / (1.0 - d)),
        };
        Ok(FiberFamily {
            kind: FiberKind::PFamily { p, forcing },
            bounds,
        })
    }

    /// Trigonometric lift with base-dependent coefficients. Validated on a
    /// grid: the infimum of the derivative minus the interpolation budget
    /// must stay positive.
    pub fn trig_lift(constant: TrigPoly, modes: Vec<(TrigPoly, TrigPoly)>) -> Result<Self> {
        let freq = |k: usize| TAU * (k + 1) as f64;
        let osc: f64 = modes
            .iter()
            .enumerate()
            .map(|(k, (a, b))| freq(k) * (a.sup_bound() + b.sup_bound()))
            .sum();
        let second: f64 = modes
            .iter()
            .enumerate()
            .map(|(k, (a, b))| freq(k).powi(2) * (a.sup_bound() + b.sup_bound()))
            .sum();
        let mixed: f64 = modes
            .iter()
            .enumerate()
            .map(|(k, (a, b))| freq(k) * (a.deriv_bound() + b.deriv_bound()))
            .sum();
        let base_lipschitz = constant.deriv_bound()
            + modes
                .iter()
                .map(|(a, b)| a.deriv_bound() + b.deriv_bound())
                .sum::<f64>();

        let mut fam = FiberFamily {
            kind: FiberKind::TrigLift { constant, modes },
            bounds: LiftBounds {
                deriv_sup: 1.0 + osc,
                deriv_inf: 1.0 - osc,
                second,
                base_lipschitz,
                mixed,
                norm_bound: f64::INFINITY,
            },
        };

        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..VALIDATION_THETA {
            let theta = i as f64 / VALIDATION_THETA as f64;
            for j in 0..VALIDATION_Y {
                let d = fam.derivative(theta, j as f64 / VALIDATION_Y as f64);
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        let budget = 0.5 * second / VALIDATION_Y as f64 + 0.5 * mixed / VALIDATION_THETA as f64;
        let inf = (lo - budget).max(1.0 - osc);
        if inf <= 0.0 {
            return Err(Error::InvalidFamily(format!(
                "lift is not an orientation-preserving diffeomorphism: grid inf of DF is {lo:.6}, budget {budget:.6}"
            )));
        }
        let sup = (hi + budget).min(1.0 + osc);
        fam.bounds.deriv_inf = inf;
        fam.bounds.deriv_sup = sup;
        fam.bounds.norm_bound = sup.max(1.0 / inf);
        Ok(fam)
    }

    pub fn kind(&self) -> &FiberKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FiberKind::Arnold { .. } => "arnold",
            FiberKind::PFamily { .. } => "pfamily",
            FiberKind::TrigLift { .. } => "triglift",
        }
    }

    pub fn bounds(&self) -> &LiftBounds {
        &self.bounds
    }

    pub fn norm_bound(&self) -> f64 {
        self.bounds.norm_bound
    }

    pub fn base_lipschitz(&self) -> f64 {
        self.bounds.base_lipschitz
    }

    /// False when every `F_x` is the same map.
    pub fn depends_on_base(&self) -> bool {
        match &self.kind {
            FiberKind::Arnold { beta, q, .. } => *beta != 0.0 && !q.is_constant(),
            FiberKind::PFamily { forcing, .. } => !forcing.is_constant(),
            FiberKind::TrigLift { constant, modes } => {
                !constant.is_constant()
                    || modes.iter().any(|(a, b)| !a.is_constant() || !b.is_constant())
            }
        }
    }

    /// The additive base forcing: `q` for Arnold (scaled by `β` in the map),
    /// `h` for P-families and `c(θ)` for trig lifts.
    pub fn forcing(&self) -> &TrigPoly {
        match &self.kind {
            FiberKind::Arnold { q, .. } => q,
            FiberKind::PFamily { forcing, .. } => forcing,
            FiberKind::TrigLift { constant, .. } => constant,
        }
    }

    /// Same family with the additive forcing replaced.
    pub fn with_forcing(&self, forcing: TrigPoly) -> Result<Self> {
        match &self.kind {
            FiberKind::Arnold {
                tau, alpha, beta, ..
            } => Self::arnold(*tau, *alpha, *beta, forcing),
            FiberKind::PFamily { p, .. } => Self::pfamily(p.clone(), forcing),
            FiberKind::TrigLift { modes, .. } => Self::trig_lift(forcing, modes.clone()),
        }
    }

    /// `F_x(y) − y` at base phase `theta`; 1-periodic in `y`.
    #[inline]
    pub fn displacement(&self, theta: f64, y: f64) -> f64 {
        match &self.kind {
            FiberKind::Arnold {
                tau,
                alpha,
                beta,
                q,
            } => {
                let mut d = tau + alpha / TAU * (TAU * y).sin();
                if *beta != 0.0 {
                    d += beta * q.eval(theta);
                }
                d
            }
            FiberKind::PFamily { p, forcing } => p.eval(y) + forcing.eval(theta),
            FiberKind::TrigLift { constant, modes } => {
                let (s1, c1) = (TAU * y).sin_cos();
                let (mut ck, mut sk) = (c1, s1);
                let mut d = constant.eval(theta);
                for (a, b) in modes {
                    d += a.eval(theta) * ck + b.eval(theta) * sk;
                    let next_c = ck * c1 - sk * s1;
                    sk = sk * c1 + ck * s1;
                    ck = next_c;
                }
                d
            }
        }
    }

    #[inline]
    pub fn eval(&self, theta: f64, y: f64) -> f64 {
        y + self.displacement(theta, y)
    }

    /// `dF_x/dy`.
    #[inline]
    pub fn derivative(&self, theta: f64, y: f64) -> f64 {
        match &self.kind {
            FiberKind::Arnold { alpha, .. } => 1.0 + alpha * (TAU * y).cos(),
            FiberKind::PFamily { p, .. } => 1.0 + p.deriv(y),
            FiberKind::TrigLift { modes, .. } => {
                let (s1, c1) = (TAU * y).sin_cos();
                let (mut ck, mut sk) = (c1, s1);
                let mut d = 1.0;
                for (k, (a, b)) in modes.iter().enumerate() {
                    let freq = TAU * (k + 1) as f64;
                    d += freq * (b.eval(theta) * ck - a.eval(theta) * sk);
                    let next_c = ck * c1 - sk * s1;
                    sk = sk * c1 + ck * s1;
                    ck = next_c;
                }
                d
            }
        }
    }

    /// Solve `F_x(y) = z`.
    ///
    /// The bracket is grown by whole turns around `z − (F_x(z) − z)`, bisected
    /// to width `1e-6`, then polished with Newton steps to a residual below
    /// `1e-12` (or a few ulps of `z` when `|z|` is large).
    pub fn inverse(&self, theta: f64, z: f64) -> Result<f64> {
        const MAX_TURNS: usize = 1 << 16;
        const MAX_BISECT: usize = 200;
        const MAX_NEWTON: usize = 60;

        if !z.is_finite() {
            return Err(Error::NonConvergence {
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
        let y0 = z - self.displacement(theta, z);
        let (mut a, mut b) = (y0 - 1.0, y0 + 1.0);
        let mut turns = 0;
        while self.eval(theta, a) > z && turns < MAX_TURNS {
            a -= 1.0;
            turns += 1;
        }
        while self.eval(theta, b) < z && turns < MAX_TURNS {
            b += 1.0;
            turns += 1;
        }
        let mut iterations = turns;
        let mut bisections = 0;
        while b - a > 1e-6 && bisections < MAX_BISECT {
            let mid = 0.5 * (a + b);
            if self.eval(theta, mid) < z {
                a = mid;
            } else {
                b = mid;
            }
            bisections += 1;
        }
        iterations += bisections;

        let tol = 1e-12_f64.max(4.0 * f64::EPSILON * z.abs());
        let mut y = 0.5 * (a + b);
        let mut r = self.eval(theta, y) - z;
        for _ in 0..MAX_NEWTON {
            if r.abs() < tol {
                return Ok(y);
            }
            iterations += 1;
            let next = y - r / self.derivative(theta, y);
            y = if next > a && next < b { next } else { 0.5 * (a + b) };
            r = self.eval(theta, y) - z;
            if r < 0.0 {
                a = y;
            } else {
                b = y;
            }
        }
        if r.abs() < tol {
            Ok(y)
        } else {
            Err(Error::NonConvergence {
                iterations,
                residual: r.abs(),
            })
        }
    }
}

/// A base map together with a fiber family: the skew product
/// `(x, y) ↦ (g(x), F_x(y))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcedMap {
    pub base: BaseMap,
    pub fiber: FiberFamily,
}

impl ForcedMap {
    pub fn new(base: BaseMap, fiber: FiberFamily) -> Self {
        ForcedMap { base, fiber }
    }

    pub fn lift_eval(&self, x: &BasePoint, y: f64) -> Result<f64> {
        self.base.check_point(x)?;
        Ok(self.fiber.eval(self.base.phase(x), y))
    }

    pub fn lift_derivative(&self, x: &BasePoint, y: f64) -> Result<f64> {
        self.base.check_point(x)?;
        Ok(self.fiber.derivative(self.base.phase(x), y))
    }

    pub fn lift_inverse(&self, x: &BasePoint, z: f64) -> Result<f64> {
        self.base.check_point(x)?;
        self.fiber.inverse(self.base.phase(x), z)
    }

    /// `(F_ε^n)_x(y) − y` where each step applies `F` and then adds `eps`.
    pub fn displacement_orbit(
        &self,
        x: &BasePoint,
        y: f64,
        n: usize,
        eps: f64,
    ) -> Result<f64> {
        if n == 0 {
            return Err(Error::Precondition("orbit length must be at least 1".into()));
        }
        self.base.check_point(x)?;
        let mut x = x.clone();
        Ok(self.walk(&mut x, y, n, eps).displacement)
    }

    /// Iterate `n` steps from `(x, y)`, advancing `x` in place.
    pub(crate) fn walk(&self, x: &mut BasePoint, y: f64, n: usize, eps: f64) -> Walk {
        let start = y.floor();
        let mut frac = y - start;
        let frac0 = frac;
        let mut winding = 0.0;
        for _ in 0..n {
            let theta = self.base.phase(x);
            let next = frac + self.fiber.displacement(theta, frac) + eps;
            let k = next.floor();
            winding += k;
            frac = next - k;
            self.base.step_mut(x);
        }
        Walk {
            displacement: winding + (frac - frac0),
            end: start + winding + frac,
        }
    }

    /// Same as [`walk`](Self::walk) but also accumulates `Σ log DF` along
    /// the orbit.
    pub(crate) fn walk_log_derivative(&self, x: &mut BasePoint, y: f64, n: usize) -> (f64, f64) {
        let start = y.floor();
        let mut frac = y - start;
        let mut winding = 0.0;
        let mut acc = 0.0;
        for _ in 0..n {
            let theta = self.base.phase(x);
            acc += self.fiber.derivative(theta, frac).ln();
            let next = frac + self.fiber.displacement(theta, frac);
            let k = next.floor();
            winding += k;
            frac = next - k;
            self.base.step_mut(x);
        }
        (acc, start + winding + frac)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Walk {
    pub displacement: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub end: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::GOLDEN_CONJUGATE;
    use proptest::prelude::*;

    fn rot() -> BaseMap {
        BaseMap::rotation(&[GOLDEN_CONJUGATE]).unwrap()
    }

    fn x0() -> BasePoint {
        BasePoint::Torus(vec![0.3])
    }

    fn forced(f: FiberFamily) -> ForcedMap {
        ForcedMap::new(rot(), f)
    }

    #[test]
    fn arnold_eval_examples() {
        let m = forced(FiberFamily::arnold_unforced(0.25, 0.0).unwrap());
        assert!((m.lift_eval(&x0(), 0.5).unwrap() - 0.75).abs() < 1e-15);

        let m = forced(FiberFamily::arnold_unforced(0.0, 0.5).unwrap());
        assert_eq!(m.lift_eval(&x0(), 0.0).unwrap(), 0.0);
        // 0.45 + (0.5/2π) sin(0.9π), evaluated independently
        let want = 0.45 + 0.5 / TAU * (0.9 * std::f64::consts::PI).sin();
        assert!((want - 0.474_590_7).abs() < 1e-6);
        assert!((m.lift_eval(&x0(), 0.45).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn arnold_derivative_examples() {
        let m = forced(FiberFamily::arnold_unforced(0.0, 0.5).unwrap());
        assert!((m.lift_derivative(&x0(), 0.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((m.lift_derivative(&x0(), 0.5).unwrap() - 0.5).abs() < 1e-15);
        let rigid = forced(FiberFamily::arnold(0.7, 0.0, 0.4, TrigPoly::cos1()).unwrap());
        for i in 0..10 {
            assert_eq!(rigid.lift_derivative(&x0(), i as f64 * 0.1).unwrap(), 1.0);
        }
    }

    #[test]
    fn inverse_examples() {
        let m = forced(FiberFamily::arnold_unforced(0.25, 0.0).unwrap());
        assert!((m.lift_inverse(&x0(), 0.75).unwrap() - 0.5).abs() < 1e-12);
        let m = forced(FiberFamily::arnold_unforced(0.0, 0.5).unwrap());
        let z = 0.45 + 0.5 / TAU * (0.9 * std::f64::consts::PI).sin();
        assert!((m.lift_inverse(&x0(), z).unwrap() - 0.45).abs() < 1e-9);
        // large translation: bracket must move by whole turns
        let m = forced(FiberFamily::arnold_unforced(7.3, 0.6).unwrap());
        let y = m.lift_inverse(&x0(), 2.0).unwrap();
        assert!((m.lift_eval(&x0(), y).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn displacement_orbit_examples() {
        let m = forced(FiberFamily::arnold_unforced(0.3, 0.0).unwrap());
        assert!((m.displacement_orbit(&x0(), 0.2, 100, 0.0).unwrap() - 30.0).abs() < 1e-10);
        assert!((m.displacement_orbit(&x0(), 0.2, 100, 0.01).unwrap() - 31.0).abs() < 1e-10);
        let m = forced(FiberFamily::arnold_unforced(0.0, 0.5).unwrap());
        assert_eq!(m.displacement_orbit(&x0(), 0.0, 50, 0.0).unwrap(), 0.0);
        assert!(m.displacement_orbit(&x0(), 0.0, 0, 0.0).is_err());
    }

    #[test]
    fn displacement_is_shift_monotone() {
        let f = FiberFamily::arnold(0.1, 0.7, 0.3, TrigPoly::cos1()).unwrap();
        let m = forced(f);
        let ds: Vec<f64> = [-0.01, 0.0, 0.01]
            .iter()
            .map(|&e| m.displacement_orbit(&x0(), 0.37, 200, e).unwrap())
            .collect();
        assert!(ds[0] < ds[1] && ds[1] < ds[2], "{ds:?}");
    }

    #[test]
    fn pfamily_rejects_large_derivative() {
        let p = TrigPoly::new(0.0, vec![0.0], vec![0.2]).unwrap(); // ‖P′‖ = 0.4π > 1
        assert!(matches!(
            FiberFamily::pfamily(p, TrigPoly::zero()),
            Err(Error::InvalidFamily(_))
        ));
        let p = TrigPoly::new(0.0, vec![0.0], vec![0.15]).unwrap();
        assert!(FiberFamily::pfamily(p, TrigPoly::cos1()).is_ok());
        assert!(FiberFamily::pfamily(TrigPoly::constant(0.3), TrigPoly::zero()).is_err());
    }

    #[test]
    fn arnold_rejects_alpha_out_of_range() {
        assert!(FiberFamily::arnold_unforced(0.0, 1.0).is_err());
        assert!(FiberFamily::arnold_unforced(0.0, -0.1).is_err());
        assert!(FiberFamily::arnold_unforced(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn trig_lift_validation() {
        let a1 = TrigPoly::new(0.05, vec![0.02], vec![0.0]).unwrap();
        let ok = FiberFamily::trig_lift(TrigPoly::cos1().scale(0.1), vec![(a1, TrigPoly::zero())]);
        let fam = ok.unwrap();
        assert!(fam.bounds().deriv_inf > 0.0);
        assert!(fam.depends_on_base());
        let big = TrigPoly::constant(0.3);
        assert!(FiberFamily::trig_lift(TrigPoly::zero(), vec![(big, TrigPoly::zero())]).is_err());
    }

    #[test]
    fn depends_on_base() {
        assert!(!FiberFamily::arnold_unforced(0.1, 0.5).unwrap().depends_on_base());
        assert!(!FiberFamily::arnold(0.1, 0.5, 0.0, TrigPoly::cos1())
            .unwrap()
            .depends_on_base());
        assert!(FiberFamily::arnold(0.1, 0.5, 0.2, TrigPoly::cos1())
            .unwrap()
            .depends_on_base());
    }

    #[test]
    fn skew_and_odometer_phases_feed_the_forcing() {
        let f = FiberFamily::arnold(0.0, 0.0, 1.0, TrigPoly::sin1()).unwrap();
        let skew = ForcedMap::new(BaseMap::skew_shift(0.3).unwrap(), f.clone());
        let p = BasePoint::Torus(vec![0.0, 0.25]);
        assert!((skew.lift_eval(&p, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let odo = ForcedMap::new(BaseMap::odometer(&[2, 2]).unwrap(), f);
        // digits (0, 1) have phase 1/4
        let p = BasePoint::Digits(vec![0, 1]);
        assert!((odo.lift_eval(&p, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    fn family_strategy() -> impl Strategy<Value = FiberFamily> {
        prop_oneof![
            (-2.0f64..2.0, 0.0f64..0.95, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(
                |(t, a, b, c, s)| FiberFamily::arnold(t, a, b, TrigPoly::new(0.0, vec![c], vec![s]).unwrap())
                    .unwrap()
            ),
            (-0.07f64..0.07, -0.07f64..0.07, -0.5f64..0.5).prop_map(|(a, b, h)| {
                FiberFamily::pfamily(
                    TrigPoly::new(0.0, vec![a + 0.01], vec![b]).unwrap(),
                    TrigPoly::new(h, vec![0.2], vec![0.0]).unwrap(),
                )
                .unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn commutes_with_unit_translation(fam in family_strategy(), th in 0.0f64..1.0, y in -5.0f64..5.0) {
            let d = fam.eval(th, y + 1.0) - fam.eval(th, y) - 1.0;
            prop_assert!(d.abs() < 1e-12);
        }

        #[test]
        fn inverse_round_trip(fam in family_strategy(), th in 0.0f64..1.0, y in -5.0f64..5.0) {
            let z = fam.eval(th, y);
            let back = fam.inverse(th, z).unwrap();
            prop_assert!((back - y).abs() < 1e-10);
        }

        #[test]
        fn displacement_cocycle(fam in family_strategy(), y in 0.0f64..1.0, n in 1usize..40, m in 1usize..40) {
            let map = ForcedMap::new(rot(), fam);
            let mut x = BasePoint::Torus(vec![0.17]);
            let first = map.walk(&mut x, y, n, 0.0);
            let second = map.walk(&mut x, first.end, m, 0.0);
            let mut x2 = BasePoint::Torus(vec![0.17]);
            let whole = map.walk(&mut x2, y, n + m, 0.0);
            let tol = 1e-12 * map.fiber.norm_bound().powi(m as i32).min(1e6) * (n + m) as f64;
            prop_assert!((whole.displacement - first.displacement - second.displacement).abs() <= tol.max(1e-11));
        }
    }
}

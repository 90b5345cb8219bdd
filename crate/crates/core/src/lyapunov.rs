//! Extremal fiberwise Lyapunov exponents.
//!
//! `L_+ = lim (1/n) sup log D(F^n)_x(w)` and `L_-` the matching infimum. The
//! sequence `sup S_n` is subadditive, so `L_+ ≤ sup S_m / m` for every `m`;
//! [`exponent_bounds`] evaluates `S_m` on a grid for the dyadic divisors `m`
//! of `n` (and `n` itself), widens each by a Lipschitz margin, and keeps the
//! tightest block. The lower exponent is handled symmetrically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::BasePoint;
use crate::error::{Error, Result};
use crate::fiber::ForcedMap;
use crate::numeric::{geometric_sum, pairwise_sum};
use crate::rotation::base_nodes;
use crate::Rigor;

pub const DEFAULT_QUADRATURE_NODES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub n: usize,
    /// Upper bound on `L_+`.
    pub upper_l_plus: f64,
    /// Lower bound on `L_-`.
    pub lower_l_minus: f64,
    /// How far the bounds sit outside the raw grid values at `n`.
    pub margin: f64,
    /// `(1/n)·max` of the grid log-derivative sums.
    pub grid_sup: f64,
    /// `(1/n)·min` of the grid log-derivative sums.
    pub grid_inf: f64,
    /// Block length that produced `upper_l_plus`.
    pub upper_block: usize,
    /// Block length that produced `lower_l_minus`.
    pub lower_block: usize,
    pub grid_x: usize,
    pub grid_y: usize,
    pub rigor: Rigor,
}

impl ExponentEstimate {
    /// `max(L_+ bound, −L_- bound)`.
    pub fn extremal(&self) -> f64 {
        self.upper_l_plus.max(-self.lower_l_minus)
    }
}

/// `Σ_{i<n} log DF` along the orbit of `(x, w)`.
pub fn log_derivative_sum(map: &ForcedMap, x: &BasePoint, w: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    map.base.check_point(x)?;
    Ok(map.walk_log_derivative(&mut x.clone(), w, n).0)
}

/// Block lengths: powers of two dividing `n`, and `n`.
fn blocks(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..usize::BITS)
        .map(|k| 1usize << k)
        .take_while(|&m| m <= n)
        .filter(|m| n.is_multiple_of(*m))
        .collect();
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

pub fn exponent_bounds(
    map: &ForcedMap,
    n: usize,
    grid_x: usize,
    grid_y: usize,
) -> Result<ExponentEstimate> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if grid_x < 2 || grid_y < 2 {
        return Err(Error::Precondition("grids need at least 2 nodes".into()));
    }
    let sizes = blocks(n);
    let nodes = base_nodes(map, grid_x);
    let h_y = 1.0 / grid_y as f64;

    let empty = || {
        (
            vec![f64::NEG_INFINITY; sizes.len()],
            vec![f64::INFINITY; sizes.len()],
        )
    };
    let (sup, inf) = nodes
        .par_iter()
        .map(|x0| {
            let (mut sup, mut inf) = empty();
            for j in 0..grid_y {
                let mut x = x0.clone();
                let mut frac = j as f64 * h_y;
                let mut acc = 0.0;
                let mut next_block = 0;
                for step in 1..=n {
                    let theta = map.base.phase(&x);
                    acc += map.fiber.derivative(theta, frac).ln();
                    let y = frac + map.fiber.displacement(theta, frac);
                    frac = y - y.floor();
                    map.base.step_mut(&mut x);
                    if step == sizes[next_block] {
                        sup[next_block] = sup[next_block].max(acc);
                        inf[next_block] = inf[next_block].min(acc);
                        next_block += 1;
                    }
                }
            }
            (sup, inf)
        })
        .reduce(empty, |(mut s1, mut i1), (s2, i2)| {
            for k in 0..s1.len() {
                s1[k] = s1[k].max(s2[k]);
                i1[k] = i1[k].min(i2[k]);
            }
            (s1, i1)
        });

    let b = map.fiber.bounds();
    let (l, ell) = (b.deriv_sup, b.deriv_inf);
    let kappa = b.second / ell;
    let depends = map.fiber.depends_on_base();
    let h_x = 1.0 / grid_x as f64;
    let margin_for = |m: usize| -> f64 {
        let g = geometric_sum(l, m);
        let lip_y = kappa * g;
        let lip_x = if depends {
            let nested = if (l - 1.0).abs() < 1e-15 {
                (m * m.saturating_sub(1)) as f64 / 2.0
            } else {
                (g - m as f64) / (l - 1.0)
            };
            m as f64 * b.mixed / ell + kappa * b.base_lipschitz * nested
        } else {
            0.0
        };
        let fp = 16.0 * f64::EPSILON * m as f64;
        0.5 * h_y * lip_y + 0.5 * h_x * lip_x + fp
    };

    let (mut upper, mut upper_block) = (l.ln(), 1);
    let (mut lower, mut lower_block) = (ell.ln(), 1);
    for (k, &m) in sizes.iter().enumerate() {
        let mg = margin_for(m);
        let mf = m as f64;
        let u = (sup[k] + mg) / mf;
        if u < upper {
            upper = u;
            upper_block = m;
        }
        let lo = (inf[k] - mg) / mf;
        if lo > lower {
            lower = lo;
            lower_block = m;
        }
    }
    let last = sizes.len() - 1;
    let grid_sup = sup[last] / n as f64;
    let grid_inf = inf[last] / n as f64;
    // keep the bounds outside the raw grid values (fp guard)
    let upper_l_plus = upper.max(grid_sup);
    let lower_l_minus = lower.min(grid_inf);

    Ok(ExponentEstimate {
        n,
        upper_l_plus,
        lower_l_minus,
        margin: (upper_l_plus - grid_sup).max(grid_inf - lower_l_minus),
        grid_sup,
        grid_inf,
        upper_block,
        lower_block,
        grid_x,
        grid_y,
        rigor: map.base.rigor(),
    })
}

/// Composite Simpson quadrature of `w ↦ D(F^n)_x(w)` over `[0, 1]` with
/// `nodes` subintervals. The exact value is 1.
pub fn derivative_integral_check(
    map: &ForcedMap,
    x: &BasePoint,
    n: usize,
    nodes: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if nodes < 8 || !nodes.is_multiple_of(2) {
        return Err(Error::Precondition(format!(
            "Simpson needs an even node count >= 8, got {nodes}"
        )));
    }
    map.base.check_point(x)?;
    let h = 1.0 / nodes as f64;
    let terms: Vec<f64> = (0..=nodes)
        .map(|j| {
            let mut xx = x.clone();
            let mut y = j as f64 * h;
            let mut prod = 1.0;
            for _ in 0..n {
                let theta = map.base.phase(&xx);
                prod *= map.fiber.derivative(theta, y);
                y = map.fiber.eval(theta, y);
                map.base.step_mut(&mut xx);
            }
            let w = if j == 0 || j == nodes {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * prod
        })
        .collect();
    Ok(pairwise_sum(&terms) * h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{BaseMap, GOLDEN_CONJUGATE};
    use crate::fiber::FiberFamily;
    use crate::trig::TrigPoly;

    fn rot() -> BaseMap {
        BaseMap::rotation(&[GOLDEN_CONJUGATE]).unwrap()
    }

    fn arnold(tau: f64, alpha: f64, beta: f64) -> ForcedMap {
        ForcedMap::new(rot(), FiberFamily::arnold(tau, alpha, beta, TrigPoly::cos1()).unwrap())
    }

    #[test]
    fn block_sizes() {
        assert_eq!(blocks(12), vec![1, 2, 4, 12]);
        assert_eq!(blocks(1024).last(), Some(&1024));
        assert_eq!(blocks(1), vec![1]);
    }

    #[test]
    fn log_sum_examples() {
        let x = BasePoint::Torus(vec![0.2]);
        assert_eq!(log_derivative_sum(&arnold(0.4, 0.0, 0.3), &x, 0.7, 100).unwrap(), 0.0);
        let m = arnold(0.0, 0.5, 0.0);
        let rep = log_derivative_sum(&m, &x, 0.0, 10).unwrap();
        assert!((rep - 10.0 * 1.5f64.ln()).abs() < 1e-12);
        assert!((rep - 4.0546).abs() < 1e-4);
        let att = log_derivative_sum(&m, &x, 0.5, 10).unwrap();
        assert!((att - 10.0 * 0.5f64.ln()).abs() < 1e-9);
        assert!((att + 6.9315).abs() < 1e-4);
    }

    #[test]
    fn chain_rule_consistency() {
        let m = arnold(0.21, 0.7, 0.3);
        let x = BasePoint::Torus(vec![0.4]);
        let (first, end) = m.walk_log_derivative(&mut x.clone(), 0.33, 40);
        let mut x1 = x.clone();
        for _ in 0..40 {
            m.base.step_mut(&mut x1);
        }
        let second = log_derivative_sum(&m, &x1, end, 25).unwrap();
        let whole = log_derivative_sum(&m, &x, 0.33, 65).unwrap();
        assert!((whole - first - second).abs() < 1e-9 * 65.0);
    }

    #[test]
    fn fixed_points_realize_extremes() {
        let m = arnold(0.0, 0.5, 0.0);
        for n in [16, 64, 256] {
            let e = exponent_bounds(&m, n, 4, 64).unwrap();
            assert!(e.upper_l_plus >= 1.5f64.ln() - 1e-9, "{e:?}");
            assert!(e.lower_l_minus <= 0.5f64.ln() + 1e-9, "{e:?}");
            assert!(e.lower_l_minus <= e.upper_l_plus);
        }
    }

    #[test]
    fn rigid_map_has_zero_exponents() {
        let e = exponent_bounds(&arnold(0.3, 0.0, 0.5), 128, 16, 16).unwrap();
        assert!(e.upper_l_plus.abs() <= e.margin + 1e-12);
        assert!(e.lower_l_minus.abs() <= e.margin + 1e-12);
        assert!(e.margin < 1e-10);
    }

    #[test]
    fn bounds_respect_sign_and_norm() {
        for (t, a, b) in [(0.1, 0.3, 0.2), (0.37, 0.9, 1.0), (0.0, 0.6, 0.0)] {
            let m = arnold(t, a, b);
            let e = exponent_bounds(&m, 64, 16, 64).unwrap();
            assert!(e.lower_l_minus <= e.margin);
            assert!(e.upper_l_plus >= -e.margin);
            assert!(e.extremal() <= m.fiber.norm_bound().ln() + e.margin + 1e-12);
        }
    }

    #[test]
    fn subadditive_monotonicity() {
        let m = arnold(0.13, 0.6, 0.2);
        let a = exponent_bounds(&m, 32, 16, 64).unwrap();
        let b = exponent_bounds(&m, 64, 16, 64).unwrap();
        assert!(b.upper_l_plus <= a.upper_l_plus + 1e-12);
        assert!(b.lower_l_minus >= a.lower_l_minus - 1e-12);
    }

    #[test]
    fn integral_is_one() {
        let x = BasePoint::Torus(vec![0.1]);
        let m = arnold(0.2, 0.4, 0.1);
        assert!((derivative_integral_check(&m, &x, 1, 4096).unwrap() - 1.0).abs() < 1e-8);
        let m = arnold(0.37, 0.9, 1.0);
        assert!((derivative_integral_check(&m, &x, 6, 4096).unwrap() - 1.0).abs() < 1e-6);
        let m = arnold(0.37, 0.0, 1.0);
        assert_eq!(derivative_integral_check(&m, &x, 5, 64).unwrap(), 1.0);
        assert!(derivative_integral_check(&m, &x, 5, 7).is_err());
        assert!(derivative_integral_check(&m, &x, 5, 6).is_err());
    }
}

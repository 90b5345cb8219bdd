//! Finite-time displacement bounds and rotation-number enclosures.
//!
//! For every `n`, `n·ρ(F)` lies between the infimum and supremum over all
//! `(x, y)` of the `n`-step displacement `(F^n)_x(y) − y`. Those extrema are
//! estimated on a product grid and widened by a margin that covers points
//! between grid nodes:
//!
//! * in `y`, monotonicity of `F^n_x` gives a margin of one mesh width, and the
//!   derivative bounds give `(h_y/2)·max(L^n − 1, 1 − ℓ^n)`; the smaller is
//!   used (zero for rigid rotations);
//! * in the base, `F_{x'} ≤ F_x + λ·d(x, x')` with `λ` the base Lipschitz
//!   constant, so over an isometric base the orbit of a nearby `x'` is
//!   dominated by the `±λh_x/2`-shifted orbit at the node. Those shifted
//!   orbits are computed directly, which avoids the `Σ L^k` blow-up of a pure
//!   chain-rule budget. The chain-rule budget is kept as a second candidate.
//!
//! Only rotation bases are isometric, so only they yield
//! [`Rigor::Rigorous`] results.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::BasePoint;
use crate::error::{Error, Result};
use crate::fiber::ForcedMap;
use crate::numeric::geometric_sum;
use crate::Rigor;

pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_ENCLOSURE_N: usize = 4096;
pub const DEFAULT_SCAN_N: usize = 16384;

/// Above this `margin / n` an enclosure is returned but flagged.
pub const MARGIN_FLAG_PER_STEP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementStats {
    pub n: usize,
    /// Grid minimum of the displacement.
    pub m_lo: f64,
    /// Grid maximum of the displacement.
    pub m_hi: f64,
    pub margin: f64,
    pub grid_x: usize,
    pub grid_y: usize,
    pub rigor: Rigor,
}

impl DisplacementStats {
    /// Lower bound for the true infimum.
    pub fn lower(&self) -> f64 {
        self.m_lo - self.margin
    }

    /// Upper bound for the true supremum.
    pub fn upper(&self) -> f64 {
        self.m_hi + self.margin
    }

    /// True when the margin exceeds a quarter turn per step.
    pub fn flagged(&self) -> bool {
        self.margin / self.n as f64 > MARGIN_FLAG_PER_STEP
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationEnclosure {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub rigor: Rigor,
    pub flagged: bool,
}

impl RotationEnclosure {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, rho: f64) -> bool {
        self.lo <= rho && rho <= self.hi
    }
}

/// Start points of the base grid. Families that ignore the base collapse to
/// a single node.
pub(crate) fn base_nodes(map: &ForcedMap, grid_x: usize) -> Vec<BasePoint> {
    if map.fiber.depends_on_base() {
        map.base.grid(grid_x)
    } else {
        vec![map.base.origin()]
    }
}

#[derive(Clone, Copy)]
struct Extrema {
    lo: f64,
    hi: f64,
    lo_shifted: f64,
    hi_shifted: f64,
}

impl Extrema {
    const EMPTY: Extrema = Extrema {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
        lo_shifted: f64::INFINITY,
        hi_shifted: f64::NEG_INFINITY,
    };

    fn merge(self, o: Extrema) -> Extrema {
        Extrema {
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
            lo_shifted: self.lo_shifted.min(o.lo_shifted),
            hi_shifted: self.hi_shifted.max(o.hi_shifted),
        }
    }
}

pub fn displacement_bounds(
    map: &ForcedMap,
    n: usize,
    grid_x: usize,
    grid_y: usize,
    eps: f64,
) -> Result<DisplacementStats> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if grid_x < 2 || grid_y < 2 {
        return Err(Error::Precondition("grids need at least 2 nodes".into()));
    }
    let bounds = map.fiber.bounds();
    let nodes = base_nodes(map, grid_x);
    let depends = map.fiber.depends_on_base();
    let h_x = 1.0 / grid_x as f64;
    let h_y = 1.0 / grid_y as f64;
    let eta = if depends {
        0.5 * h_x * bounds.base_lipschitz
    } else {
        0.0
    };

    let ext = nodes
        .par_iter()
        .map(|x0| {
            let mut e = Extrema::EMPTY;
            for j in 0..grid_y {
                let y = j as f64 * h_y;
                let d = map.walk(&mut x0.clone(), y, n, eps).displacement;
                e.lo = e.lo.min(d);
                e.hi = e.hi.max(d);
                if eta > 0.0 {
                    let up = map.walk(&mut x0.clone(), y, n, eps + eta).displacement;
                    let dn = map.walk(&mut x0.clone(), y, n, eps - eta).displacement;
                    e.hi_shifted = e.hi_shifted.max(up);
                    e.lo_shifted = e.lo_shifted.min(dn);
                } else {
                    e.hi_shifted = e.hi_shifted.max(d);
                    e.lo_shifted = e.lo_shifted.min(d);
                }
            }
            e
        })
        .reduce(|| Extrema::EMPTY, Extrema::merge);

    let (l, ell) = (bounds.deriv_sup, bounds.deriv_inf);
    let lip_y = (l.powf(n as f64) - 1.0).max(1.0 - ell.powf(n as f64)).max(0.0);
    let y_margin = h_y.min(0.5 * h_y * lip_y);

    let x_margin = if depends {
        let shifted = (ext.hi_shifted - ext.hi).max(ext.lo - ext.lo_shifted).max(0.0);
        let chain = 0.5 * h_x * bounds.base_lipschitz * geometric_sum(l, n);
        shifted.min(chain)
    } else {
        0.0
    };
    let fp = 16.0 * f64::EPSILON * (n as f64 + ext.lo.abs().max(ext.hi.abs()));

    Ok(DisplacementStats {
        n,
        m_lo: ext.lo,
        m_hi: ext.hi,
        margin: x_margin + y_margin + fp,
        grid_x,
        grid_y,
        rigor: map.base.rigor(),
    })
}

/// `[(m_lo − margin)/n, (m_hi + margin)/n]`, which contains `ρ(F_eps)`
/// whenever the stats are rigorous.
pub fn rotation_enclosure(
    map: &ForcedMap,
    n: usize,
    grid_x: usize,
    grid_y: usize,
    eps: f64,
) -> Result<RotationEnclosure> {
    let stats = displacement_bounds(map, n, grid_x, grid_y, eps)?;
    Ok(enclosure_from_stats(&stats))
}

pub fn enclosure_from_stats(stats: &DisplacementStats) -> RotationEnclosure {
    let n = stats.n as f64;
    RotationEnclosure {
        lo: stats.lower() / n,
        hi: stats.upper() / n,
        n: stats.n,
        rigor: stats.rigor,
        flagged: stats.flagged(),
    }
}

/// Uncertified `displacement / n` along one orbit.
pub fn rho_orbit_estimate(map: &ForcedMap, x: &BasePoint, y: f64, n: usize) -> Result<f64> {
    Ok(map.displacement_orbit(x, y, n, 0.0)? / n as f64)
}

//! Base homeomorphisms `g: X → X`.
//!
//! Three uniquely ergodic bases are supported: minimal rotations of `T^d`,
//! the skew-shift on `T^2`, and the odometer (adding machine) on a finite
//! window of mixed-radix digits. Forcing functions read a single scalar
//! *phase* of a base point (see [`BaseMap::phase`]).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::circle_dist;
use crate::{rng, Rigor};

/// Golden-ratio conjugate `(√5 − 1)/2`, the default frequency.
pub const GOLDEN_CONJUGATE: f64 = 0.618_033_988_749_894_9;

/// Default odometer window depth.
pub const DEFAULT_ODOMETER_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BasePoint {
    /// Coordinates on `T^d`, each in `[0, 1)`.
    Torus(Vec<f64>),
    /// Odometer digits, least significant first.
    Digits(Vec<u32>),
}

impl BasePoint {
    pub fn torus(coords: &[f64]) -> Self {
        BasePoint::Torus(coords.iter().map(|c| c.rem_euclid(1.0)).map(fix_one).collect())
    }

    fn shape(&self) -> String {
        match self {
            BasePoint::Torus(c) => format!("torus point of dimension {}", c.len()),
            BasePoint::Digits(d) => format!("digit window of length {}", d.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseMap {
    Rotation { omega: Vec<f64> },
    SkewShift { alpha: f64 },
    Odometer { radices: Vec<u32> },
}

impl Default for BaseMap {
    fn default() -> Self {
        BaseMap::Rotation {
            omega: vec![GOLDEN_CONJUGATE],
        }
    }
}

/// Reduce to `[0, 1)`; `rem_euclid` can round up to exactly 1.0.
#[inline]
fn fix_one(c: f64) -> f64 {
    if c >= 1.0 {
        0.0
    } else {
        c
    }
}

impl BaseMap {
    pub fn rotation(omega: &[f64]) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::InvalidBase("rotation needs at least one frequency".into()));
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidBase("rotation frequencies must be finite".into()));
        }
        Ok(BaseMap::Rotation {
            omega: omega.to_vec(),
        })
    }

    pub fn skew_shift(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidBase("skew-shift alpha must be finite".into()));
        }
        Ok(BaseMap::SkewShift { alpha })
    }

    pub fn odometer(radices: &[u32]) -> Result<Self> {
        if radices.is_empty() {
            return Err(Error::InvalidBase("odometer needs at least one digit".into()));
        }
        if let Some(r) = radices.iter().find(|&&r| r < 2) {
            return Err(Error::InvalidBase(format!("odometer radix {r} is below 2")));
        }
        Ok(BaseMap::Odometer {
            radices: radices.to_vec(),
        })
    }

    /// Constant-radix odometer on a window of `depth` digits.
    pub fn odometer_uniform(radix: u32, depth: usize) -> Result<Self> {
        Self::odometer(&vec![radix; depth])
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BaseMap::Rotation { .. } => "rotation",
            BaseMap::SkewShift { .. } => "skewshift",
            BaseMap::Odometer { .. } => "odometer",
        }
    }

    /// Number of torus coordinates, or digits in the odometer window.
    pub fn dimension(&self) -> usize {
        match self {
            BaseMap::Rotation { omega } => omega.len(),
            BaseMap::SkewShift { .. } => 2,
            BaseMap::Odometer { radices } => radices.len(),
        }
    }

    /// Lipschitz constant of `g` in the phase metric; exact (1.0, isometry)
    /// only for rotations.
    pub fn lipschitz_in_base(&self) -> f64 {
        1.0
    }

    pub fn rigor(&self) -> Rigor {
        match self {
            BaseMap::Rotation { .. } => Rigor::Rigorous,
            _ => Rigor::Heuristic,
        }
    }

    /// True for a rotation of the circle `T^1`, the only base on which
    /// strips can be resampled.
    pub fn is_circle_rotation(&self) -> bool {
        matches!(self, BaseMap::Rotation { omega } if omega.len() == 1)
    }

    pub fn origin(&self) -> BasePoint {
        match self {
            BaseMap::Rotation { omega } => BasePoint::Torus(vec![0.0; omega.len()]),
            BaseMap::SkewShift { .. } => BasePoint::Torus(vec![0.0; 2]),
            BaseMap::Odometer { radices } => BasePoint::Digits(vec![0; radices.len()]),
        }
    }

    pub fn check_point(&self, p: &BasePoint) -> Result<()> {
        let ok = match (self, p) {
            (BaseMap::Rotation { omega }, BasePoint::Torus(c)) => {
                c.len() == omega.len() && c.iter().all(|v| (0.0..1.0).contains(v))
            }
            (BaseMap::SkewShift { .. }, BasePoint::Torus(c)) => {
                c.len() == 2 && c.iter().all(|v| (0.0..1.0).contains(v))
            }
            (BaseMap::Odometer { radices }, BasePoint::Digits(d)) => {
                d.len() == radices.len() && d.iter().zip(radices).all(|(d, r)| d < r)
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainShape {
                expected: self.expected_shape(),
                found: p.shape(),
            })
        }
    }

    fn expected_shape(&self) -> String {
        match self {
            BaseMap::Rotation { omega } => {
                format!("torus point of dimension {} in [0,1)", omega.len())
            }
            BaseMap::SkewShift { .. } => "torus point of dimension 2 in [0,1)".into(),
            BaseMap::Odometer { radices } => {
                format!("digit window of length {} within radices", radices.len())
            }
        }
    }

    pub fn step(&self, p: &BasePoint) -> Result<BasePoint> {
        self.check_point(p)?;
        let mut q = p.clone();
        self.step_mut(&mut q);
        Ok(q)
    }

    /// In-place step. The caller guarantees `p` has this map's shape.
    #[inline]
    pub(crate) fn step_mut(&self, p: &mut BasePoint) {
        match (self, p) {
            (BaseMap::Rotation { omega }, BasePoint::Torus(c)) => {
                for (ci, wi) in c.iter_mut().zip(omega) {
                    *ci = fix_one((*ci + wi).rem_euclid(1.0));
                }
            }
            (BaseMap::SkewShift { alpha }, BasePoint::Torus(c)) => {
                let (x, y) = (c[0], c[1]);
                c[0] = fix_one((x + alpha).rem_euclid(1.0));
                c[1] = fix_one((y + x).rem_euclid(1.0));
            }
            (BaseMap::Odometer { radices }, BasePoint::Digits(d)) => {
                for (di, &r) in d.iter_mut().zip(radices) {
                    *di += 1;
                    if *di < r {
                        return;
                    }
                    *di = 0;
                }
            }
            _ => unreachable!("base point shape checked by caller"),
        }
    }

    pub fn orbit(&self, p: &BasePoint, n: usize) -> Result<Vec<BasePoint>> {
        if n == 0 {
            return Err(Error::Precondition("orbit length must be at least 1".into()));
        }
        self.check_point(p)?;
        let mut out = Vec::with_capacity(n + 1);
        let mut cur = p.clone();
        out.push(cur.clone());
        for _ in 0..n {
            self.step_mut(&mut cur);
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Scalar coordinate in `[0, 1)` read by forcing functions: the first
    /// coordinate of a rotation, the skewed (second) coordinate of the
    /// skew-shift, and the radix expansion `Σ d_i / (r_0⋯r_i)` of an
    /// odometer point.
    #[inline]
    pub fn phase(&self, p: &BasePoint) -> f64 {
        match (self, p) {
            (BaseMap::Rotation { .. }, BasePoint::Torus(c)) => c[0],
            (BaseMap::SkewShift { .. }, BasePoint::Torus(c)) => c[1],
            (BaseMap::Odometer { radices }, BasePoint::Digits(d)) => {
                let mut acc = 0.0;
                for (di, &r) in d.iter().zip(radices).rev() {
                    acc = (f64::from(*di) + acc) / f64::from(r);
                }
                acc
            }
            _ => unreachable!("base point shape checked by caller"),
        }
    }

    /// Uniform grid with `per_dim` nodes per torus coordinate. Odometer
    /// grids are the digit expansions of the phases `k / per_dim`.
    pub fn grid(&self, per_dim: usize) -> Vec<BasePoint> {
        let per_dim = per_dim.max(1);
        match self {
            BaseMap::Rotation { .. } | BaseMap::SkewShift { .. } => {
                let dim = self.dimension();
                let total = per_dim.pow(dim as u32);
                (0..total)
                    .map(|mut idx| {
                        let mut c = vec![0.0; dim];
                        for ci in c.iter_mut() {
                            *ci = (idx % per_dim) as f64 / per_dim as f64;
                            idx /= per_dim;
                        }
                        BasePoint::Torus(c)
                    })
                    .collect()
            }
            BaseMap::Odometer { radices } => (0..per_dim)
                .map(|k| {
                    let mut phase = k as f64 / per_dim as f64;
                    let digits = radices
                        .iter()
                        .map(|&r| {
                            let scaled = phase * f64::from(r);
                            let d = (scaled.floor() as u32).min(r - 1);
                            phase = scaled - f64::from(d);
                            d
                        })
                        .collect();
                    BasePoint::Digits(digits)
                })
                .collect(),
        }
    }

    /// Uniform random point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BasePoint {
        match self {
            BaseMap::Rotation { .. } | BaseMap::SkewShift { .. } => {
                BasePoint::Torus((0..self.dimension()).map(|_| rng.gen::<f64>()).collect())
            }
            BaseMap::Odometer { radices } => {
                BasePoint::Digits(radices.iter().map(|&r| rng.gen_range(0..r)).collect())
            }
        }
    }

    /// Sup-norm circle distance between two torus points; for digit windows,
    /// `1 / (r_0⋯r_{k-1})` where `k` is the first differing digit.
    pub fn distance(&self, p: &BasePoint, q: &BasePoint) -> f64 {
        match (self, p, q) {
            (_, BasePoint::Torus(a), BasePoint::Torus(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| circle_dist(*x, *y))
                .fold(0.0, f64::max),
            (BaseMap::Odometer { radices }, BasePoint::Digits(a), BasePoint::Digits(b)) => {
                let mut scale = 1.0;
                for ((x, y), &r) in a.iter().zip(b).zip(radices) {
                    if x != y {
                        return scale;
                    }
                    scale /= f64::from(r);
                }
                0.0
            }
            _ => f64::NAN,
        }
    }

    /// Analytic generators of the Schwartzman range `G(g)`, each paired with
    /// the `(φ, ψ)` coboundary witness it comes from.
    pub fn schwartzman_generators(&self) -> SchwartzmanGenerators {
        let mut witnesses = vec![CocycleWitness::Integer];
        match self {
            BaseMap::Rotation { omega } => {
                witnesses.extend((0..omega.len()).map(|axis| CocycleWitness::Coordinate { axis }));
            }
            BaseMap::SkewShift { .. } => witnesses.push(CocycleWitness::Coordinate { axis: 0 }),
            BaseMap::Odometer { radices } => {
                witnesses.extend((1..=radices.len()).map(|level| CocycleWitness::Tower { level }));
            }
        }
        SchwartzmanGenerators {
            generators: witnesses.iter().map(|w| w.mean(self)).collect(),
            rigor: GeneratorRigor::Exact,
            witnesses,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorRigor {
    Exact,
    Declared,
}

/// A coboundary pair `(φ, ψ)` with `ψ∘g − ψ = φ (mod 1)` and constant `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CocycleWitness {
    /// `φ ≡ 1`, `ψ ≡ 0`.
    Integer,
    /// `ψ` is a torus coordinate; `φ` is the constant it advances by.
    Coordinate { axis: usize },
    /// `ψ` is the position within the tower of the first `level` digits,
    /// normalized by the tower height.
    Tower { level: usize },
}

impl CocycleWitness {
    /// The generator `∫ φ` this witness certifies.
    pub fn mean(&self, map: &BaseMap) -> f64 {
        match (self, map) {
            (CocycleWitness::Integer, _) => 1.0,
            (CocycleWitness::Coordinate { axis }, BaseMap::Rotation { omega }) => omega[*axis],
            (CocycleWitness::Coordinate { .. }, BaseMap::SkewShift { alpha }) => *alpha,
            (CocycleWitness::Tower { level }, BaseMap::Odometer { radices }) => radices[..*level]
                .iter()
                .fold(1.0, |acc, &r| acc / f64::from(r)),
            _ => f64::NAN,
        }
    }

    pub fn phi(&self, map: &BaseMap, _p: &BasePoint) -> f64 {
        self.mean(map)
    }

    pub fn psi(&self, _map: &BaseMap, p: &BasePoint) -> f64 {
        match (self, p) {
            (CocycleWitness::Integer, _) => 0.0,
            (CocycleWitness::Coordinate { axis }, BasePoint::Torus(c)) => c[*axis],
            (CocycleWitness::Tower { level }, BasePoint::Digits(d)) => {
                let BaseMap::Odometer { radices } = _map else {
                    return f64::NAN;
                };
                let mut acc = 0.0;
                for (di, &r) in d[..*level].iter().zip(&radices[..*level]) {
                    acc = (acc + f64::from(*di)) / f64::from(r);
                }
                acc
            }
            _ => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchwartzmanGenerators {
    pub generators: Vec<f64>,
    pub rigor: GeneratorRigor,
    pub witnesses: Vec<CocycleWitness>,
}

/// Max over `samples` seeded points of the circle distance between
/// `ψ(g(x)) − ψ(x)` and `φ(x)`.
pub fn cocycle_residual<Phi, Psi>(
    map: &BaseMap,
    phi: Phi,
    psi: Psi,
    samples: usize,
    seed: u64,
) -> f64
where
    Phi: Fn(&BasePoint) -> f64,
    Psi: Fn(&BasePoint) -> f64,
{
    let mut rng = rng::stream(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = map.sample(&mut rng);
        let mut gx = x.clone();
        map.step_mut(&mut gx);
        let d = circle_dist(psi(&gx) - psi(&x), phi(&x));
        worst = worst.max(d);
    }
    worst
}

/// Residual of a packaged witness.
pub fn witness_residual(map: &BaseMap, w: &CocycleWitness, samples: usize, seed: u64) -> f64 {
    cocycle_residual(map, |p| w.phi(map, p), |p| w.psi(map, p), samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(c: &[f64]) -> BasePoint {
        BasePoint::Torus(c.to_vec())
    }

    fn close(p: &BasePoint, q: &[f64]) -> bool {
        match p {
            BasePoint::Torus(c) => c.iter().zip(q).all(|(a, b)| (a - b).abs() < 1e-12),
            _ => false,
        }
    }

    #[test]
    fn rotation_step() {
        let g = BaseMap::rotation(&[0.25]).unwrap();
        assert!(close(&g.step(&torus(&[0.9])).unwrap(), &[0.15]));
    }

    #[test]
    fn skew_step() {
        let g = BaseMap::skew_shift(0.3).unwrap();
        assert!(close(&g.step(&torus(&[0.5, 0.7])).unwrap(), &[0.8, 0.2]));
    }

    #[test]
    fn odometer_step_carries() {
        let g = BaseMap::odometer(&[2, 2, 2]).unwrap();
        let p = BasePoint::Digits(vec![1, 1, 0]);
        assert_eq!(g.step(&p).unwrap(), BasePoint::Digits(vec![0, 0, 1]));
        // overflow of the window wraps
        let top = BasePoint::Digits(vec![1, 1, 1]);
        assert_eq!(g.step(&top).unwrap(), BasePoint::Digits(vec![0, 0, 0]));
    }

    #[test]
    fn shape_errors() {
        let g = BaseMap::rotation(&[0.25]).unwrap();
        assert!(matches!(
            g.step(&torus(&[0.1, 0.2])),
            Err(Error::DomainShape { .. })
        ));
        assert!(g.step(&BasePoint::Digits(vec![0])).is_err());
        assert!(g.step(&torus(&[1.5])).is_err());
        let o = BaseMap::odometer(&[3, 2]).unwrap();
        assert!(o.step(&BasePoint::Digits(vec![3, 0])).is_err());
        assert!(BaseMap::odometer(&[2, 1]).is_err());
    }

    #[test]
    fn rotation_orbit_period_four() {
        let g = BaseMap::rotation(&[0.25]).unwrap();
        let o = g.orbit(&torus(&[0.0]), 4).unwrap();
        let want = [0.0, 0.25, 0.5, 0.75, 0.0];
        assert_eq!(o.len(), 5);
        for (p, w) in o.iter().zip(want) {
            assert!(close(p, &[w]));
        }
        assert!(g.orbit(&torus(&[0.0]), 0).is_err());
    }

    #[test]
    fn skew_orbit_by_hand() {
        let g = BaseMap::skew_shift(0.5).unwrap();
        let o = g.orbit(&torus(&[0.0, 0.0]), 2).unwrap();
        assert!(close(&o[1], &[0.5, 0.0]));
        assert!(close(&o[2], &[0.0, 0.5]));
    }

    #[test]
    fn generators_match_examples() {
        let w = 0.618_033_988_749_894_9;
        let g = BaseMap::rotation(&[w]).unwrap().schwartzman_generators();
        assert_eq!(g.generators, vec![1.0, w]);
        assert_eq!(g.rigor, GeneratorRigor::Exact);

        let s = BaseMap::skew_shift(0.3).unwrap().schwartzman_generators();
        assert_eq!(s.generators, vec![1.0, 0.3]);

        let o = BaseMap::odometer(&[2, 2]).unwrap().schwartzman_generators();
        assert_eq!(o.generators, vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn every_generator_has_a_vanishing_residual() {
        let maps = [
            BaseMap::rotation(&[GOLDEN_CONJUGATE, 0.4142135623730951]).unwrap(),
            BaseMap::skew_shift(0.3).unwrap(),
            BaseMap::odometer(&[2, 3, 5]).unwrap(),
            BaseMap::odometer_uniform(2, DEFAULT_ODOMETER_DEPTH).unwrap(),
        ];
        for map in &maps {
            let gens = map.schwartzman_generators();
            assert!(gens.generators.contains(&1.0));
            for w in &gens.witnesses {
                let r = witness_residual(map, w, 10_000, 11);
                assert!(r < 1e-9, "{map:?} {w:?} residual {r}");
            }
        }
    }

    #[test]
    fn residual_examples() {
        let w = 0.3819660112501051;
        let g = BaseMap::rotation(&[w]).unwrap();
        let coord = |p: &BasePoint| match p {
            BasePoint::Torus(c) => c[0],
            _ => unreachable!(),
        };
        assert!(cocycle_residual(&g, |_| w, coord, 1000, 1) < 1e-12);
        let off = cocycle_residual(&g, |_| w + 0.1, coord, 1000, 1);
        assert!((off - 0.1).abs() < 1e-9);

        let s = BaseMap::skew_shift(0.3).unwrap();
        let r = cocycle_residual(
            &s,
            |p| match p {
                BasePoint::Torus(c) => c[0],
                _ => unreachable!(),
            },
            |p| match p {
                BasePoint::Torus(c) => c[1],
                _ => unreachable!(),
            },
            1000,
            2,
        );
        assert!(r < 1e-12);
    }

    #[test]
    fn odometer_full_cycle_returns() {
        let radices = [2, 3, 2];
        let g = BaseMap::odometer(&radices).unwrap();
        let start = BasePoint::Digits(vec![1, 2, 0]);
        let period: u32 = radices.iter().product();
        let mut p = start.clone();
        for k in 1..=period {
            p = g.step(&p).unwrap();
            if k < period {
                assert_ne!(p, start);
            }
        }
        assert_eq!(p, start);
    }

    #[test]
    fn odometer_grid_phases_are_uniform() {
        let g = BaseMap::odometer_uniform(2, 16).unwrap();
        let grid = g.grid(8);
        for (k, p) in grid.iter().enumerate() {
            assert!((g.phase(p) - k as f64 / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_grid_size() {
        let g = BaseMap::rotation(&[0.1, 0.2]).unwrap();
        assert_eq!(g.grid(5).len(), 25);
        assert!(g.grid(5).iter().all(|p| g.check_point(p).is_ok()));
    }
}

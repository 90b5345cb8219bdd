//! Finite trigonometric polynomials on `T = R/Z`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `c + Σ_k a_k cos(2πkw) + b_k sin(2πkw)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    constant: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigPoly {
    /// Build from mode coefficients; the shorter of `cos`/`sin` is zero
    /// padded.
    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        let all = std::iter::once(&constant).chain(&cos).chain(&sin);
        if all.clone().any(|c| !c.is_finite()) {
            return Err(Error::Coefficients {
                text: format!("{constant}; {cos:?}; {sin:?}"),
                reason: "coefficients must be finite".into(),
            });
        }
        let (mut cos, mut sin) = (cos, sin);
        let k = cos.len().max(sin.len());
        cos.resize(k, 0.0);
        sin.resize(k, 0.0);
        Ok(TrigPoly { constant, cos, sin })
    }

    pub fn constant(c: f64) -> Self {
        TrigPoly {
            constant: c,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `cos(2πw)`.
    pub fn cos1() -> Self {
        TrigPoly {
            constant: 0.0,
            cos: vec![1.0],
            sin: vec![0.0],
        }
    }

    /// `sin(2πw)`.
    pub fn sin1() -> Self {
        TrigPoly {
            constant: 0.0,
            cos: vec![0.0],
            sin: vec![1.0],
        }
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Highest mode index `K`.
    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|&c| c == 0.0)
    }

    /// Flat coefficient vector `[c, a_1, b_1, …, a_K, b_K]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + 2 * self.degree());
        v.push(self.constant);
        for (a, b) in self.cos.iter().zip(&self.sin) {
            v.push(*a);
            v.push(*b);
        }
        v
    }

    pub fn from_vec(v: &[f64]) -> Result<Self> {
        let Some((&c, rest)) = v.split_first() else {
            return Ok(Self::zero());
        };
        let cos = rest.iter().step_by(2).copied().collect();
        let sin = rest.iter().skip(1).step_by(2).copied().collect();
        Self::new(c, cos, sin)
    }

    /// Copy with at least `k` modes.
    pub fn padded(&self, k: usize) -> Self {
        let mut p = self.clone();
        if p.cos.len() < k {
            p.cos.resize(k, 0.0);
            p.sin.resize(k, 0.0);
        }
        p
    }

    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        if self.cos.is_empty() {
            return self.constant;
        }
        let w = w - w.floor();
        let (s1, c1) = (TAU * w).sin_cos();
        let (mut ck, mut sk) = (c1, s1);
        let mut acc = self.constant;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            acc += a * ck + b * sk;
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
        acc
    }

    /// First derivative in `w`.
    #[inline]
    pub fn deriv(&self, w: f64) -> f64 {
        if self.cos.is_empty() {
            return 0.0;
        }
        let w = w - w.floor();
        let (s1, c1) = (TAU * w).sin_cos();
        let (mut ck, mut sk) = (c1, s1);
        let mut acc = 0.0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let freq = TAU * (k + 1) as f64;
            acc += freq * (b * ck - a * sk);
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
        acc
    }

    /// Second derivative in `w`.
    pub fn deriv2(&self, w: f64) -> f64 {
        let mut acc = 0.0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let freq = TAU * (k + 1) as f64;
            let (s, c) = (freq * w).sin_cos();
            acc -= freq * freq * (a * c + b * s);
        }
        acc
    }

    /// `Σ_k (|a_k| + |b_k|) (2πk)^order`, an upper bound on `sup |D^order P|`
    /// (for `order = 0` the constant is excluded: it bounds the oscillation
    /// about the mean).
    pub fn mode_bound(&self, order: i32) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| (a.abs() + b.abs()) * (TAU * (k + 1) as f64).powi(order))
            .sum()
    }

    /// Upper bound on `sup |P|`.
    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.mode_bound(0)
    }

    /// Upper bound on `sup |P'|`.
    pub fn deriv_bound(&self) -> f64 {
        self.mode_bound(1)
    }

    /// Upper bound on `sup |P''|`.
    pub fn deriv2_bound(&self) -> f64 {
        self.mode_bound(2)
    }

    /// Coefficient-wise sum.
    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let k = self.degree().max(other.degree());
        let (a, b) = (self.padded(k), other.padded(k));
        TrigPoly {
            constant: a.constant + b.constant,
            cos: a.cos.iter().zip(&b.cos).map(|(x, y)| x + y).collect(),
            sin: a.sin.iter().zip(&b.sin).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> TrigPoly {
        TrigPoly {
            constant: self.constant * s,
            cos: self.cos.iter().map(|c| c * s).collect(),
            sin: self.sin.iter().map(|c| c * s).collect(),
        }
    }

    /// Max absolute coefficient difference.
    pub fn coeff_distance(&self, other: &TrigPoly) -> f64 {
        let k = self.degree().max(other.degree());
        let (a, b) = (self.padded(k).to_vec(), other.padded(k).to_vec());
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Text form `c0; a1,b1; a2,b2; ...`.
impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            write!(f, "; {a},{b}")?;
        }
        Ok(())
    }
}

impl FromStr for TrigPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Coefficients {
            text: s.to_string(),
            reason: reason.to_string(),
        };
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("{:?} is not a number", t.trim())))
        };
        let mut parts = s.split(';');
        let head = parts.next().unwrap_or("");
        if head.trim().is_empty() {
            return Err(bad("missing constant term"));
        }
        let constant = num(head)?;
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        for part in parts {
            if part.trim().is_empty() {
                continue;
            }
            let mut ab = part.split(',');
            let (Some(a), Some(b), None) = (ab.next(), ab.next(), ab.next()) else {
                return Err(bad("each mode needs exactly two entries \"a,b\""));
            };
            cos.push(num(a)?);
            sin.push(num(b)?);
        }
        TrigPoly::new(constant, cos, sin).map_err(|_| bad("coefficients must be finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(p: &TrigPoly, w: f64) -> f64 {
        let mut acc = p.constant_term();
        for (k, (a, b)) in p.cos_coeffs().iter().zip(p.sin_coeffs()).enumerate() {
            let t = TAU * (k + 1) as f64 * w;
            acc += a * t.cos() + b * t.sin();
        }
        acc
    }

    #[test]
    fn parse_and_display() {
        let p: TrigPoly = "0.5; 1,0; 0,-0.25".parse().unwrap();
        assert_eq!(p.constant_term(), 0.5);
        assert_eq!(p.cos_coeffs(), &[1.0, 0.0]);
        assert_eq!(p.sin_coeffs(), &[0.0, -0.25]);
        let back: TrigPoly = p.to_string().parse().unwrap();
        assert_eq!(back, p);
        assert_eq!("3".parse::<TrigPoly>().unwrap(), TrigPoly::constant(3.0));
    }

    #[test]
    fn parse_errors() {
        assert!("".parse::<TrigPoly>().is_err());
        assert!("1; 2".parse::<TrigPoly>().is_err());
        assert!("1; 2,3,4".parse::<TrigPoly>().is_err());
        assert!("x; 1,2".parse::<TrigPoly>().is_err());
        assert!("1; nan,0".parse::<TrigPoly>().is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = TrigPoly::new(0.1, vec![0.3, -0.2, 0.05], vec![0.1, 0.4, -0.07]).unwrap();
        let h = 1e-6;
        for i in 0..50 {
            let w = i as f64 / 50.0;
            let fd = (p.eval(w + h) - p.eval(w - h)) / (2.0 * h);
            assert!((p.deriv(w) - fd).abs() < 1e-6);
            let fd2 = (p.deriv(w + h) - p.deriv(w - h)) / (2.0 * h);
            assert!((p.deriv2(w) - fd2).abs() < 1e-4);
        }
    }

    #[test]
    fn bounds_dominate_samples() {
        let p = TrigPoly::new(-0.4, vec![0.3, -0.2], vec![0.1, 0.4]).unwrap();
        for i in 0..1000 {
            let w = i as f64 / 1000.0;
            assert!(p.eval(w).abs() <= p.sup_bound() + 1e-12);
            assert!(p.deriv(w).abs() <= p.deriv_bound() + 1e-12);
            assert!(p.deriv2(w).abs() <= p.deriv2_bound() + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn recurrence_matches_direct(
            coeffs in proptest::collection::vec(-1.0f64..1.0, 1..17),
            w in -3.0f64..3.0,
        ) {
            let p = TrigPoly::from_vec(&coeffs).unwrap();
            prop_assert!((p.eval(w) - naive(&p, w)).abs() < 1e-11);
            prop_assert!((p.eval(w + 1.0) - p.eval(w)).abs() < 1e-11);
        }
    }
}

//! Small numeric helpers shared across modules.

/// Distance on `R/Z`.
pub(crate) fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Reduce to `[-0.5, 0.5)`.
pub(crate) fn wrap_half(d: f64) -> f64 {
    let r = (d + 0.5).rem_euclid(1.0) - 0.5;
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Pairwise (cascade) summation.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `Σ_{k=0}^{n-1} l^k`, saturating to infinity.
pub(crate) fn geometric_sum(l: f64, n: usize) -> f64 {
    if (l - 1.0).abs() < 1e-15 {
        return n as f64;
    }
    let p = l.powf(n as f64);
    if !p.is_finite() {
        return f64::INFINITY;
    }
    (p - 1.0) / (l - 1.0)
}

//! Sample moments and their standard errors.

use serde::Serialize;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    covariance(xs, xs)
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    s / (xs.len() as f64 - 1.0)
}

pub fn se_of_mean(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the sample covariance of `(xs, ys)`.
///
/// Returns the larger of the Gaussian-theory value
/// `sqrt((s_x^2 s_y^2 + c^2)/(R-1))` and the moment-based estimate
/// `sqrt((m22 - c^2)/R)`, which tracks excess kurtosis. With `xs == ys` the
/// first reduces to `s^2 sqrt(2/(R-1))`.
pub fn se_of_covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let r = xs.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let c = covariance(xs, ys);
    let normal = ((variance(xs) * variance(ys) + c * c) / (r - 1.0)).sqrt();
    let m22 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| ((x - mx) * (y - my)).powi(2))
        .sum::<f64>()
        / r;
    let robust = ((m22 - c * c).max(0.0) / r).sqrt();
    normal.max(robust)
}

pub fn se_of_variance(xs: &[f64]) -> f64 {
    se_of_covariance(xs, xs)
}

/// Linear-interpolated empirical quantile, `q` in [0, 1].
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Empirical estimate compared against a theoretical target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub empirical: f64,
    pub target: f64,
    pub se: f64,
    pub z: f64,
    pub pass: bool,
}

impl Comparison {
    pub fn new(empirical: f64, target: f64, se: f64, multiplier: f64) -> Self {
        let diff = empirical - target;
        let z = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        Self {
            empirical,
            target,
            se,
            z,
            pass: diff.abs() <= multiplier * se,
        }
    }
}

//! Exchangeability-safe conformal quantiles and the sample-moment algebra
//! (plain and augmented by one point) that every calibration method builds on.

use crate::error::{Error, Result};
use crate::residuals::ResidualMatrix;
use serde::{Deserialize, Serialize};

/// Per-dimension location/scale estimates of a residual sample.
///
/// The standard deviation uses divisor `n`, not `n - 1`; the augmentation
/// identity in [`augmented_moments`] depends on this convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub n: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScalingParams {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// The `⌈(1-α)(n+1)⌉`-th smallest element of `scores ∪ {+∞}`.
///
/// Returns `+∞` exactly when the target rank exceeds `n`. Uses expected
/// linear-time selection rather than a full sort.
pub fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    let n = scores.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty score list".into()));
    }
    let k = ((1.0 - alpha) * (n as f64 + 1.0)).ceil() as usize;
    if k > n {
        return Ok(f64::INFINITY);
    }
    let mut work = scores.to_vec();
    let (_, kth, _) = work.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    Ok(*kth)
}

/// Column means and standard deviations (divisor `n`) of a residual matrix.
///
/// A constant column is a hard error: zero sample variance breaks the
/// standardization that every downstream method relies on.
pub fn moments(residuals: &ResidualMatrix) -> Result<ScalingParams> {
    let n = residuals.n();
    let d = residuals.d();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 calibration points, got {n}"
        )));
    }
    let mut mean = Vec::with_capacity(d);
    let mut std = Vec::with_capacity(d);
    for j in 0..d {
        let col = residuals.column(j);
        let m = col.iter().sum::<f64>() / n as f64;
        let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
        let s = v.sqrt();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::DegenerateDimension(j));
        }
        mean.push(m);
        std.push(s);
    }
    Ok(ScalingParams {
        n,
        mean,
        std,
    })
}

/// Moments of the sample augmented with one extra point `z` in dimension `j`,
/// without re-summation:
///
/// `μ̂(z) = (n μ̂ + z) / (n+1)`,  `σ̂(z) = sqrt((z - μ̂)² / (n+1) + σ̂²)`.
pub fn augmented_moments(params: &ScalingParams, z: f64, j: usize) -> (f64, f64) {
    let n = params.n as f64;
    let mu = params.mean[j];
    let sigma = params.std[j];
    if z.is_infinite() {
        return (f64::INFINITY, f64::INFINITY);
    }
    let mean = (n * mu + z) / (n + 1.0);
    let std = ((z - mu) * (z - mu) / (n + 1.0) + sigma * sigma).sqrt();
    (mean, std)
}

/// Standard deviation of the augmented sample only.
pub fn augmented_std(params: &ScalingParams, z: f64, j: usize) -> f64 {
    augmented_moments(params, z, j).1
}

/// The coordinate-wise standardized maximum `max_j (t_j - μ_j) / σ_j`.
pub fn standardized_max(t: &[f64], mean: &[f64], std: &[f64]) -> f64 {
    t.iter()
        .zip(mean.iter().zip(std.iter()))
        .map(|(tj, (m, s))| (tj - m) / s)
        .fold(f64::NEG_INFINITY, f64::max)
}

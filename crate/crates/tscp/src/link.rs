//! The piecewise link functions mapping a scalar quantile bound to
//! per-dimension residual thresholds; the dual characterization that the
//! transductive calibrators invert in closed form.

use crate::stats::ScalingParams;

/// Relative tolerance on the radicand `n² - (n+1)c²` below which the link is
/// treated as infinite; prevents overflow near the singularity from
/// masquerading as a finite threshold.
const RADICAND_REL_TOL: f64 = 1e-12;

/// Shared inputs of the link functions: the calibration-sample moments.
#[derive(Debug, Clone)]
pub struct LinkContext {
    pub params: ScalingParams,
}

impl LinkContext {
    pub fn new(params: ScalingParams) -> Self {
        Self { params }
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }
}

/// The finiteness boundary `n / sqrt(n+1)`: link values are finite strictly
/// below it, and all transductive-oracle scores lie strictly inside
/// `(-n/sqrt(n+1), n/sqrt(n+1))` for distinct residuals.
pub fn critical_radius(n: usize) -> f64 {
    let n = n as f64;
    n / (n + 1.0).sqrt()
}

/// Largest residual value `z >= 0` whose augmented standardized score stays
/// at or below `c`, in dimension `j`.
///
/// Total on the extended reals: 0 at or below `-n/sqrt(n+1)`, `+inf` at or
/// above `n/sqrt(n+1)`, and the closed-form branch values in between.
pub fn omega(ctx: &LinkContext, c: f64, j: usize) -> f64 {
    let n = ctx.params.n as f64;
    let mu = ctx.params.mean[j];
    let sigma = ctx.params.std[j];
    let radius = critical_radius(ctx.params.n);

    if c >= radius {
        return f64::INFINITY;
    }
    if c <= -radius {
        return 0.0;
    }
    // Factored radicand n^2 - (n+1)c^2, stable near the singularity.
    let root = (n + 1.0).sqrt();
    let radicand = (n - root * c) * (n + root * c);
    if radicand <= RADICAND_REL_TOL * n * n {
        return if c >= 0.0 { f64::INFINITY } else { 0.0 };
    }
    let scale = sigma * c.abs() * ((n + 1.0) * (n + 1.0) / radicand).sqrt();
    if c >= 0.0 {
        mu + scale
    } else {
        (mu - scale).max(0.0)
    }
}

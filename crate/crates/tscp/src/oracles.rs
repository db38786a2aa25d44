//! Brute-force reference implementations: full-grid enumeration of the
//! partition and numeric inversion/maximization for the closed-form pieces.
//! Deliberately written in a different style (scan, bisection, grid search)
//! than the fast paths they verify, so a shared bug cannot hide. Slow by
//! design.

use crate::error::{Error, Result};
use crate::link::LinkContext;
use crate::residuals::ResidualMatrix;
use crate::stats::augmented_moments;
use crate::tscp::{CellIndex, LocalBound, LwcEngine};

pub const DEFAULT_CELL_BUDGET: u128 = 100_000;

/// Everything the exhaustive sweep learns about one instance.
#[derive(Debug, Clone)]
pub struct EnumerationReport {
    /// Brute-force boundary per dimension: the max cell bound over the grid.
    pub boundaries: Vec<f64>,
    pub visited_cells: u128,
    /// Exact volume of the union of cell-clipped local boxes; cells are
    /// disjoint, so per-cell volumes just add.
    pub union_volume: f64,
}

/// Evaluate the local bound of every cell `h` in `[n+1]^d`.
pub fn enumerate_boundaries(residuals: &ResidualMatrix, alpha: f64) -> Result<EnumerationReport> {
    enumerate_boundaries_with_budget(residuals, alpha, DEFAULT_CELL_BUDGET)
}

pub fn enumerate_boundaries_with_budget(
    residuals: &ResidualMatrix,
    alpha: f64,
    budget: u128,
) -> Result<EnumerationReport> {
    let n = residuals.n();
    let d = residuals.d();
    let cells = ((n + 1) as u128).pow(d as u32);
    if cells > budget {
        return Err(Error::BudgetExceeded { cells, budget });
    }
    let engine = LwcEngine::new(residuals, alpha)?;
    let mut boundaries = vec![0.0f64; d];
    let mut union_volume = 0.0f64;
    let mut h = vec![1usize; d];
    let mut visited = 0u128;
    loop {
        visited += 1;
        let cell = CellIndex(h.clone());
        let local = engine.local_bound(&cell)?;
        if let LocalBound::Bound { .. } = local {
            let mut volume = 1.0f64;
            for j in 0..d {
                let b = engine.cell_bound(&cell, j, &local);
                if b > boundaries[j] {
                    boundaries[j] = b;
                }
                let lower = engine.sorted().order_stat(j, h[j] - 1);
                volume *= (b - lower).max(0.0);
            }
            union_volume += volume;
        }
        // Odometer increment over [1, n+1]^d.
        let mut k = 0;
        loop {
            if k == d {
                return Ok(EnumerationReport {
                    boundaries,
                    visited_cells: visited,
                    union_volume,
                });
            }
            h[k] += 1;
            if h[k] <= n + 1 {
                break;
            }
            h[k] = 1;
            k += 1;
        }
    }
}

/// Invert the augmented-score condition numerically: the largest `z >= 0`
/// whose augmented standardized score stays at or below `c`.
pub fn omega_bisection(ctx: &LinkContext, c: f64, j: usize) -> f64 {
    let score = |z: f64| {
        let (m, s) = augmented_moments(&ctx.params, z, j);
        (z - m) / s
    };
    if score(0.0) > c {
        return 0.0;
    }
    // Double until the score exceeds c or the bracket is hopeless.
    let mut hi = 1.0f64.max(ctx.params.mean[j] * 2.0);
    let mut doublings = 0;
    while score(hi) <= c {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0f64;
    // score is increasing in z past the mean; bisect to 1e-10 relative.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if score(mid) <= c {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * (1.0 + lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn golden_section_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-10 * (1.0 + a.abs()) {
            break;
        }
    }
    f(0.5 * (a + b)).max(fc).max(fd)
}

/// Log-spaced grid over `[0, z_max]` (with 0 prepended).
fn log_grid(z_max: f64, points: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(points + 1);
    grid.push(0.0);
    let lo = 1e-9f64;
    for k in 0..points {
        let t = k as f64 / (points - 1) as f64;
        grid.push(lo * (z_max / lo).powf(t));
    }
    grid
}

/// Numeric supremum of the augmented standardized score of `t_j` over all
/// hypothetical residual values `z >= 0`.
pub fn gwc_sup_grid(ctx: &LinkContext, t: &[f64], j: usize) -> f64 {
    let n = ctx.params.n as f64;
    let ratio = |z: f64| {
        let (m, s) = augmented_moments(&ctx.params, z, j);
        (t[j] - m) / s
    };
    let z_max = 1e6 * (1.0 + ctx.params.mean[j]);
    let grid = log_grid(z_max, 2000);
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0;
    for (k, &z) in grid.iter().enumerate() {
        let v = ratio(z);
        if v > best {
            best = v;
            best_idx = k;
        }
    }
    let a = if best_idx == 0 { 0.0 } else { grid[best_idx - 1] };
    let b = if best_idx + 1 < grid.len() {
        grid[best_idx + 1]
    } else {
        grid[best_idx] * 2.0
    };
    let refined = golden_section_max(&ratio, a, b);
    // Tail: as z -> inf the ratio tends to -1/sqrt(n+1) from either side.
    refined.max(best).max(-1.0 / (n + 1.0).sqrt())
}

/// Numeric versions of the per-cell scale supremum and offset infimum used
/// by the local transformation.
pub fn lwc_extrema_grid(
    engine: &LwcEngine,
    h: &CellIndex,
    j: usize,
    t_j: f64,
) -> (f64, f64) {
    let ctx = engine.link_context();
    let lower = engine.sorted().order_stat(j, h.0[j] - 1);
    let upper = engine.upper_edge(j, h.0[j]);
    let ratio_t = |z: f64| {
        let s = augmented_moments(&ctx.params, z, j).1;
        t_j / s
    };
    // sup over the cell interval of t_j / sigma(z): scan a dense linear grid.
    let hi = if upper.is_finite() {
        upper
    } else {
        // sigma(z) -> inf, so t_j/sigma -> 0; a wide finite window plus the
        // limit candidate 0 covers the sup.
        lower + 1e6 * (1.0 + ctx.params.mean[j])
    };
    let mut sup = if upper.is_finite() { f64::NEG_INFINITY } else { 0.0 };
    let steps = 2000;
    for k in 0..=steps {
        let z = lower + (hi - lower) * k as f64 / steps as f64;
        sup = sup.max(ratio_t(z));
    }
    sup = sup.max(golden_section_max(&ratio_t, lower, hi));

    // inf over [0, omega_j(Q_gwc)] of mu(z)/sigma(z), with the z -> inf
    // analytic limit 1/sqrt(n+1) when the interval is unbounded.
    let n = ctx.params.n as f64;
    let ratio_mu = |z: f64| {
        let (m, s) = augmented_moments(&ctx.params, z, j);
        m / s
    };
    let w = engine.gwc().thresholds[j];
    let mut inf = if w.is_finite() {
        f64::INFINITY
    } else {
        1.0 / (n + 1.0).sqrt()
    };
    let w_hi = if w.is_finite() {
        w
    } else {
        1e6 * (1.0 + ctx.params.mean[j])
    };
    for k in 0..=steps {
        let z = w_hi * k as f64 / steps as f64;
        inf = inf.min(ratio_mu(z));
    }
    let neg = |z: f64| -ratio_mu(z);
    inf = inf.min(-golden_section_max(&neg, 0.0, w_hi));
    (sup, inf)
}

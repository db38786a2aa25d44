//! Transductively standardized conformal calibration: the conservative
//! global-worst-case bound, the order-statistic partition with local
//! worst-case bounds, and the row-restricted boundary searches that avoid
//! enumerating the partition.

use crate::error::{Error, Result};
use crate::link::{critical_radius, omega, LinkContext};
use crate::residuals::ResidualMatrix;
use crate::stats::{augmented_moments, conformal_quantile, moments};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Cell bounds at or below this floor count as zero; the search stopping
/// rules depend on the zero/nonzero distinction.
const BOUND_FLOOR: f64 = 1e-12;

/// Output of global-worst-case calibration.
#[derive(Debug, Clone)]
pub struct GwcResult {
    /// Conformal quantile of the worst-case scores.
    pub quantile: f64,
    /// Per-dimension link values at the quantile.
    pub thresholds: Vec<f64>,
    /// The worst-case score of each calibration point.
    pub scores: Vec<f64>,
}

/// Ascending per-dimension order statistics with sentinels
/// `E^(0) = 0` and `E^(n+1) = +inf`.
#[derive(Debug, Clone)]
pub struct SortedResiduals {
    columns: Vec<Vec<f64>>,
    n: usize,
}

impl SortedResiduals {
    pub fn from_matrix(residuals: &ResidualMatrix) -> Self {
        let columns = (0..residuals.d())
            .map(|j| {
                let mut col = residuals.column(j);
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Self {
            columns,
            n: residuals.n(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    /// `E^(k)_j` for `k` in `0..=n+1`, including both sentinels.
    pub fn order_stat(&self, j: usize, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else if k > self.n {
            f64::INFINITY
        } else {
            self.columns[j][k - 1]
        }
    }
}

/// Multi-index addressing one cell of the order-statistic partition;
/// each component lies in `1..=n+1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellIndex(pub Vec<usize>);

/// Which search located a coordinate's boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchKind {
    Backward,
    Binary,
}

/// Result of Algorithm-style local calibration for one cell.
#[derive(Debug, Clone)]
pub enum LocalBound {
    /// The hypothesized cell is empty; it contributes nothing.
    Empty,
    Bound {
        quantile: f64,
        thresholds: Vec<f64>,
    },
}

/// Final TSCP output: per-dimension residual thresholds plus diagnostics.
#[derive(Debug, Clone)]
pub struct TscpResult {
    pub thresholds: Vec<f64>,
    pub used_fallback: bool,
    /// Per-coordinate search kind; empty when the GWC fallback was used.
    pub search_kinds: Vec<SearchKind>,
    /// Per-coordinate count of local-bound (cell) evaluations.
    pub cell_evals: Vec<usize>,
    /// Coordinates where every row candidate was zero.
    pub zero_coordinates: Vec<usize>,
    pub gwc: GwcResult,
}

/// Worst-case standardized score `sup_z (t_j - mu(z)) / sigma(z)`, maximized
/// over dimensions. Closed form: the augmented ratio at `z = 0`, at the
/// single interior critical point when it is admissible, and the analytic
/// tail value `-1/sqrt(n+1)`.
pub fn phi_gwc(ctx: &LinkContext, t: &[f64]) -> f64 {
    let params = &ctx.params;
    let n = params.n as f64;
    let floor = -1.0 / (n + 1.0).sqrt();
    let mut best = f64::NEG_INFINITY;
    for (j, &tj) in t.iter().enumerate() {
        let mu = params.mean[j];
        let sigma = params.std[j];
        let ratio = |z: f64| {
            let (m, s) = augmented_moments(params, z, j);
            (tj - m) / s
        };
        let mut v = ratio(0.0).max(floor);
        if tj != mu {
            let z_star = mu - sigma * sigma / (tj - mu);
            if z_star >= 0.0 {
                v = v.max(ratio(z_star));
            }
        }
        best = best.max(v);
    }
    best
}

/// Global-worst-case calibration: worst-case scores, their conformal
/// quantile, and the link values at that quantile. Total cost `O(nd)`.
pub fn gwc_calibrate(residuals: &ResidualMatrix, alpha: f64) -> Result<GwcResult> {
    let ctx = LinkContext::new(moments(residuals)?);
    gwc_calibrate_with(residuals, alpha, &ctx)
}

fn gwc_calibrate_with(
    residuals: &ResidualMatrix,
    alpha: f64,
    ctx: &LinkContext,
) -> Result<GwcResult> {
    let scores: Vec<f64> = (0..residuals.n())
        .map(|i| phi_gwc(ctx, residuals.row(i)))
        .collect();
    let quantile = conformal_quantile(&scores, alpha)?;
    let thresholds = (0..residuals.d())
        .map(|j| omega(ctx, quantile, j))
        .collect();
    Ok(GwcResult {
        quantile,
        thresholds,
        scores,
    })
}

/// Precomputed state shared by every local-bound evaluation for one
/// calibration problem.
pub struct LwcEngine<'a> {
    residuals: &'a ResidualMatrix,
    alpha: f64,
    ctx: LinkContext,
    sorted: SortedResiduals,
    gwc: GwcResult,
    /// The `c_j` constants of the local transformation; independent of the
    /// cell and the evaluation point, so computed once.
    constants: Vec<f64>,
}

impl<'a> LwcEngine<'a> {
    pub fn new(residuals: &'a ResidualMatrix, alpha: f64) -> Result<Self> {
        let ctx = LinkContext::new(moments(residuals)?);
        let gwc = gwc_calibrate_with(residuals, alpha, &ctx)?;
        let sorted = SortedResiduals::from_matrix(residuals);
        let n = residuals.n() as f64;
        let tail = 1.0 / (n + 1.0).sqrt();
        let constants = (0..residuals.d())
            .map(|j| {
                let (m0, s0) = augmented_moments(&ctx.params, 0.0, j);
                let at_zero = m0 / s0;
                let w = gwc.thresholds[j];
                let at_edge = if w.is_finite() {
                    let (mw, sw) = augmented_moments(&ctx.params, w, j);
                    mw / sw
                } else {
                    tail
                };
                at_zero.min(at_edge)
            })
            .collect();
        Ok(Self {
            residuals,
            alpha,
            ctx,
            sorted,
            gwc,
            constants,
        })
    }

    pub fn gwc(&self) -> &GwcResult {
        &self.gwc
    }

    pub fn link_context(&self) -> &LinkContext {
        &self.ctx
    }

    pub fn sorted(&self) -> &SortedResiduals {
        &self.sorted
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    fn n(&self) -> usize {
        self.residuals.n()
    }

    fn d(&self) -> usize {
        self.residuals.d()
    }

    /// Upper cell edge `U^{h_j}_j = min{E^(h_j)_j, omega_j(Q_gwc)}`.
    pub fn upper_edge(&self, j: usize, h_j: usize) -> f64 {
        self.sorted.order_stat(j, h_j).min(self.gwc.thresholds[j])
    }

    /// The unique index with `E^(h*_j - 1) <= mu_j <= E^(h*_j)` per dimension.
    pub fn mean_index(&self) -> CellIndex {
        let h = (0..self.d())
            .map(|j| {
                let mu = self.ctx.params.mean[j];
                let below = self.sorted.columns[j].partition_point(|v| *v < mu);
                below + 1
            })
            .collect();
        CellIndex(h)
    }

    /// True iff the half-open cell has positive extent in every dimension.
    pub fn cell_nonempty(&self, h: &CellIndex) -> bool {
        h.0.iter()
            .enumerate()
            .all(|(j, &hj)| self.sorted.order_stat(j, hj - 1) < self.upper_edge(j, hj))
    }

    /// Scale `r_j(h_j)` of the local transformation: the calibration sigma
    /// when the mean lies inside the cell edge interval, else the augmented
    /// sigma at the nearer edge.
    fn local_scale(&self, j: usize, h_j: usize) -> f64 {
        let mu = self.ctx.params.mean[j];
        let lower = self.sorted.order_stat(j, h_j - 1);
        let upper = self.upper_edge(j, h_j);
        if lower <= mu && mu < upper {
            self.ctx.params.std[j]
        } else {
            let s_lo = augmented_moments(&self.ctx.params, lower, j).1;
            let s_hi = if upper.is_finite() {
                augmented_moments(&self.ctx.params, upper, j).1
            } else {
                f64::INFINITY
            };
            s_lo.min(s_hi)
        }
    }

    /// Local worst-case score `max_j { t_j / r_j(h_j) - c_j }`.
    pub fn phi_lwc(&self, t: &[f64], h: &CellIndex) -> Result<f64> {
        if !self.cell_nonempty(h) {
            return Err(Error::EmptyCell(h.0.clone()));
        }
        let scales: Vec<f64> = (0..self.d()).map(|j| self.local_scale(j, h.0[j])).collect();
        Ok(self.score_with_scales(t, &scales))
    }

    fn score_with_scales(&self, t: &[f64], scales: &[f64]) -> f64 {
        t.iter()
            .zip(scales.iter().zip(self.constants.iter()))
            .map(|(tj, (r, c))| tj / r - c)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Local calibration for one cell: scores, quantile, and link values
    /// (the `Empty` marker when the cell has no extent).
    pub fn local_bound(&self, h: &CellIndex) -> Result<LocalBound> {
        if !self.cell_nonempty(h) {
            return Ok(LocalBound::Empty);
        }
        let scales: Vec<f64> = (0..self.d()).map(|j| self.local_scale(j, h.0[j])).collect();
        let scores: Vec<f64> = (0..self.n())
            .map(|i| self.score_with_scales(self.residuals.row(i), &scales))
            .collect();
        let quantile = conformal_quantile(&scores, self.alpha)?;
        let thresholds = (0..self.d()).map(|j| omega(&self.ctx, quantile, j)).collect();
        Ok(LocalBound::Bound {
            quantile,
            thresholds,
        })
    }

    /// The contribution `B^h_j` of cell `h` to coordinate `j`.
    pub fn cell_bound(&self, h: &CellIndex, j: usize, local: &LocalBound) -> f64 {
        let LocalBound::Bound { thresholds, .. } = local else {
            return 0.0;
        };
        let lower = self.sorted.order_stat(j, h.0[j] - 1);
        let upper = self.upper_edge(j, h.0[j]);
        let w = thresholds[j];
        let b = if upper > lower && w > lower {
            upper.min(w)
        } else {
            0.0
        };
        if b <= BOUND_FLOOR {
            0.0
        } else {
            b
        }
    }

    fn bound_at(&self, h_star: &CellIndex, j: usize, h_j: usize) -> Result<f64> {
        let mut h = h_star.clone();
        h.0[j] = h_j;
        let local = self.local_bound(&h)?;
        Ok(self.cell_bound(&h, j, &local))
    }

    /// Find the coordinate boundary by searching `Row_j(h*)`: a binary
    /// search upward when the mean cell already contributes, otherwise a
    /// backward scan below it. Returns the boundary, the search kind, and
    /// the number of cells evaluated.
    pub fn boundary_search(
        &self,
        j: usize,
        h_star: &CellIndex,
        bound_at_star: f64,
    ) -> Result<(f64, SearchKind, usize)> {
        let n = self.n();
        let mut evals = 0usize;
        if bound_at_star > 0.0 {
            // Once a row cell at or above h* hits zero it stays zero, so the
            // rightmost positive cell is reachable by bisection.
            let mut lo = h_star.0[j];
            let mut hi = n + 1;
            let mut best = bound_at_star;
            while lo < hi {
                let mid = (lo + hi + 1) / 2;
                let b = self.bound_at(h_star, j, mid)?;
                evals += 1;
                if b > 0.0 {
                    lo = mid;
                    best = b;
                } else {
                    hi = mid - 1;
                }
            }
            Ok((best, SearchKind::Binary, evals))
        } else {
            for h_j in (1..h_star.0[j]).rev() {
                let b = self.bound_at(h_star, j, h_j)?;
                evals += 1;
                if b > 0.0 {
                    return Ok((b, SearchKind::Backward, evals));
                }
            }
            Ok((0.0, SearchKind::Backward, evals))
        }
    }
}

/// Full TSCP calibration: global bound, mean-cell check, and per-coordinate
/// boundary searches, falling back to the conservative global thresholds
/// when the mean cell is empty. The output is independent of any test input
/// and reusable across all test points.
pub fn tscp_calibrate(residuals: &ResidualMatrix, alpha: f64) -> Result<TscpResult> {
    let engine = LwcEngine::new(residuals, alpha)?;
    let h_star = engine.mean_index();
    if !engine.cell_nonempty(&h_star) {
        let gwc = engine.gwc().clone();
        return Ok(TscpResult {
            thresholds: gwc.thresholds.clone(),
            used_fallback: true,
            search_kinds: Vec::new(),
            cell_evals: Vec::new(),
            zero_coordinates: Vec::new(),
            gwc,
        });
    }
    let star_local = engine.local_bound(&h_star)?;
    let d = residuals.d();
    // Coordinates share only immutable inputs, so the searches can run in
    // parallel with a deterministic merge.
    let per_coord: Vec<(f64, SearchKind, usize)> = (0..d)
        .into_par_iter()
        .map(|j| {
            let b_star = engine.cell_bound(&h_star, j, &star_local);
            engine.boundary_search(j, &h_star, b_star)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut thresholds = Vec::with_capacity(d);
    let mut search_kinds = Vec::with_capacity(d);
    let mut cell_evals = Vec::with_capacity(d);
    let mut zero_coordinates = Vec::new();
    for (j, (bound, kind, evals)) in per_coord.into_iter().enumerate() {
        if bound == 0.0 {
            zero_coordinates.push(j);
        }
        thresholds.push(bound);
        search_kinds.push(kind);
        // +1 for the shared mean-cell evaluation.
        cell_evals.push(evals + 1);
    }
    Ok(TscpResult {
        thresholds,
        used_fallback: false,
        search_kinds,
        cell_evals,
        zero_coordinates,
        gwc: engine.gwc().clone(),
    })
}

/// Scores of the transductive oracle are almost surely interior to the
/// critical interval; exposed for tests of the finiteness guarantee.
pub fn oracle_score_interior(n: usize, score: f64) -> bool {
    score.abs() < critical_radius(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residuals::ResidualMatrix;
    use crate::stats::ScalingParams;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn ctx(n: usize, mean: Vec<f64>, std: Vec<f64>) -> LinkContext {
        LinkContext::new(ScalingParams { n, mean, std })
    }

    fn random_matrix(rng: &mut impl Rng, n: usize, d: usize) -> ResidualMatrix {
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..n).map(|_| rng.gen::<f64>() * 5.0 + 1e-3).collect())
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        ResidualMatrix::from_columns(&refs).unwrap()
    }

    #[test]
    fn phi_gwc_floor() {
        // t far below the mean: the tail candidate floors the supremum.
        let c = ctx(10, vec![1000.0], vec![1.0]);
        let v = phi_gwc(&c, &[0.0]);
        let floor = -1.0 / 11.0f64.sqrt();
        assert!(v >= floor);
        assert!((v - floor).abs() < 1e-3);
    }

    #[test]
    fn phi_gwc_at_mean() {
        // d=1, sample {1,2,3}: t = mu = 2 gives (2 - 1.5) / sqrt(5/3).
        let c = ctx(3, vec![2.0], vec![(2.0f64 / 3.0).sqrt()]);
        let v = phi_gwc(&c, &[2.0]);
        let expect = 0.5 / (5.0f64 / 3.0).sqrt();
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn gwc_saturates_for_tiny_samples() {
        let m = ResidualMatrix::from_columns(&[&[1.0, 2.0]]).unwrap();
        // n = 2 < 1/0.1 - 1 = 9: quantile saturates at +inf.
        let r = gwc_calibrate(&m, 0.1).unwrap();
        assert_eq!(r.quantile, f64::INFINITY);
        assert_eq!(r.thresholds[0], f64::INFINITY);
    }

    #[test]
    fn gwc_thresholds_cover_top_order_stats() {
        let col: Vec<f64> = (1..=19).map(|i| i as f64).collect();
        let m = ResidualMatrix::from_columns(&[&col]).unwrap();
        let r = gwc_calibrate(&m, 0.1).unwrap();
        assert!(r.thresholds[0].is_finite());
        assert!(r.thresholds[0] >= 18.0);
    }

    #[test]
    fn mean_index_examples() {
        let m = ResidualMatrix::from_columns(&[&[1.0, 2.0, 4.0]]).unwrap();
        let engine = LwcEngine::new(&m, 0.3).unwrap();
        // mu = 7/3 lies between E^(2) = 2 and E^(3) = 4.
        assert_eq!(engine.mean_index().0, vec![3]);
    }

    #[test]
    fn mean_index_matches_linear_scan() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 8, 3);
            let engine = LwcEngine::new(&m, 0.3).unwrap();
            let h = engine.mean_index();
            for j in 0..3 {
                let mu = engine.link_context().params.mean[j];
                let mut k = 1;
                while engine.sorted().order_stat(j, k) < mu {
                    k += 1;
                }
                assert_eq!(h.0[j], k, "column {j}");
                assert!(engine.sorted().order_stat(j, k - 1) <= mu);
                assert!(mu <= engine.sorted().order_stat(j, k));
            }
        }
    }

    #[test]
    fn cell_nonempty_matches_interval_test() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 5, 2);
            let engine = LwcEngine::new(&m, 0.4).unwrap();
            for h1 in 1..=6 {
                for h2 in 1..=6 {
                    let h = CellIndex(vec![h1, h2]);
                    let direct = (0..2).all(|j| {
                        let lower = engine.sorted().order_stat(j, h.0[j] - 1);
                        let upper = engine
                            .sorted()
                            .order_stat(j, h.0[j])
                            .min(engine.gwc().thresholds[j]);
                        lower < upper
                    });
                    assert_eq!(engine.cell_nonempty(&h), direct);
                }
            }
        }
    }

    #[test]
    fn first_cell_nonempty_when_thresholds_positive() {
        let m = ResidualMatrix::from_columns(&[&[1.0, 2.0, 3.0], &[0.5, 1.5, 2.5]]).unwrap();
        let engine = LwcEngine::new(&m, 0.5).unwrap();
        if engine.gwc().thresholds.iter().all(|t| *t > 0.0) {
            assert!(engine.cell_nonempty(&CellIndex(vec![1, 1])));
        }
    }

    #[test]
    fn empty_cell_is_error_for_phi_lwc() {
        let m = ResidualMatrix::from_columns(&[&[1.0, 2.0, 3.0]]).unwrap();
        let engine = LwcEngine::new(&m, 0.5).unwrap();
        // Force an empty cell by picking one above the GWC threshold when
        // that threshold is finite; otherwise skip.
        let w = engine.gwc().thresholds[0];
        if w.is_finite() {
            let k = (1..=4)
                .find(|k| engine.sorted().order_stat(0, k - 1) >= w)
                .unwrap_or(4);
            let h = CellIndex(vec![k]);
            if !engine.cell_nonempty(&h) {
                assert!(matches!(
                    engine.phi_lwc(&[1.0], &h),
                    Err(Error::EmptyCell(_))
                ));
            }
        }
    }

    #[test]
    fn local_scale_uses_sigma_at_mean_cell() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 10, 2);
        let engine = LwcEngine::new(&m, 0.3).unwrap();
        let h_star = engine.mean_index();
        if engine.cell_nonempty(&h_star) {
            for j in 0..2 {
                let mu = engine.link_context().params.mean[j];
                let lower = engine.sorted().order_stat(j, h_star.0[j] - 1);
                let upper = engine.upper_edge(j, h_star.0[j]);
                if lower <= mu && mu < upper {
                    assert_eq!(
                        engine.local_scale(j, h_star.0[j]),
                        engine.link_context().params.std[j]
                    );
                }
            }
        }
    }

    #[test]
    fn phi_lwc_dominates_cell_restricted_scores() {
        // For any hypothetical residual z inside the cell interval, the
        // augmented standardized score of t is bounded by the local score.
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 8, 2);
            let engine = LwcEngine::new(&m, 0.3).unwrap();
            for _ in 0..20 {
                let h = CellIndex(vec![rng.gen_range(1..=9), rng.gen_range(1..=9)]);
                if !engine.cell_nonempty(&h) {
                    continue;
                }
                let t = [rng.gen::<f64>() * 8.0, rng.gen::<f64>() * 8.0];
                let lwc = engine.phi_lwc(&t, &h).unwrap();
                for j in 0..2 {
                    let lower = engine.sorted().order_stat(j, h.0[j] - 1);
                    let upper = engine.upper_edge(j, h.0[j]);
                    let hi = if upper.is_finite() { upper } else { lower + 50.0 };
                    for k in 0..10 {
                        let z = lower + (hi - lower) * k as f64 / 9.0;
                        let (mu, sigma) = augmented_moments(
                            &engine.link_context().params,
                            z,
                            j,
                        );
                        let score = (t[j] - mu) / sigma;
                        assert!(
                            score <= lwc + 1e-9,
                            "score {score} at z={z} exceeds local bound {lwc}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn local_quantile_below_global() {
        // phi_lwc >= phi_gwc pointwise implies the local conformal quantile
        // dominates, hence local link values bounded by the global ones after
        // the cell-edge min; the cell bound can never exceed the GWC box.
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..30 {
            let m = random_matrix(&mut rng, 9, 2);
            let engine = LwcEngine::new(&m, 0.3).unwrap();
            let h = engine.mean_index();
            if !engine.cell_nonempty(&h) {
                continue;
            }
            let local = engine.local_bound(&h).unwrap();
            for j in 0..2 {
                let b = engine.cell_bound(&h, j, &local);
                assert!(b <= engine.gwc().thresholds[j] + 1e-9);
            }
        }
    }

    #[test]
    fn tscp_nested_in_gwc() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..100 {
            let n = rng.gen_range(5..=15);
            let d = rng.gen_range(1..=3);
            let m = random_matrix(&mut rng, n, d);
            let alpha = [0.1, 0.2, 0.5][rng.gen_range(0..3)];
            let r = tscp_calibrate(&m, alpha).unwrap();
            for j in 0..d {
                assert!(
                    r.thresholds[j] <= r.gwc.thresholds[j] + 1e-9,
                    "nesting violated at j={j}"
                );
            }
        }
    }

    #[test]
    fn monotone_zero_structure_along_row() {
        // Along Row_j(h*) with h_j >= h*_j, once the cell bound hits zero it
        // stays zero.
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        for _ in 0..30 {
            let m = random_matrix(&mut rng, 8, 2);
            let engine = LwcEngine::new(&m, 0.2).unwrap();
            let h_star = engine.mean_index();
            if !engine.cell_nonempty(&h_star) {
                continue;
            }
            for j in 0..2 {
                let mut seen_zero = false;
                for h_j in h_star.0[j]..=9 {
                    let b = engine.bound_at(&h_star, j, h_j).unwrap();
                    if seen_zero {
                        assert_eq!(b, 0.0, "zero structure violated at h_j={h_j}");
                    }
                    if b == 0.0 {
                        seen_zero = true;
                    }
                }
            }
        }
    }
}

//! Calibration-method registry: every calibrator sits behind one trait and
//! is selected by name at runtime, so the CLI and the experiment harness can
//! treat baselines, the transductive methods, and the simulation-only
//! oracles uniformly.

use crate::error::{Error, Result};
use crate::residuals::ResidualMatrix;
use crate::seed::derive_seed;
use crate::stats::{conformal_quantile, standardized_max};
use crate::tscp::{gwc_calibrate, tscp_calibrate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Per-dimension residual thresholds `W_j >= 0` plus provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdRectangle {
    pub thresholds: Vec<f64>,
    pub method: String,
    pub alpha: f64,
    /// Pre-clamp values when any standardized threshold came out negative.
    pub raw_thresholds: Option<Vec<f64>>,
    /// Free-form notes: fallbacks taken, heuristic status, clamp counts.
    pub warnings: Vec<String>,
}

impl ThresholdRectangle {
    fn new(method: &str, alpha: f64, thresholds: Vec<f64>) -> Self {
        Self {
            thresholds,
            method: method.to_string(),
            alpha,
            raw_thresholds: None,
            warnings: Vec::new(),
        }
    }

    /// Clamp negative thresholds to zero, keeping the raw vector around.
    fn clamped(method: &str, alpha: f64, raw: Vec<f64>) -> Self {
        let mut out = Self::new(method, alpha, raw.iter().map(|w| w.max(0.0)).collect());
        if raw.iter().any(|w| *w < 0.0) {
            out.warnings.push("negative-threshold-clamped".into());
            out.raw_thresholds = Some(raw);
        }
        out
    }
}

/// Inputs that only some methods need. Oracle-only fields act as gates:
/// requesting an oracle method without supplying its input is an error, so
/// production paths cannot ask for unavailable information by accident.
#[derive(Debug, Clone, Default)]
pub struct MethodOptions {
    /// Seed for the data split; required by `split`.
    pub seed: Option<u64>,
    /// Fraction of rows assigned to the moment fold; defaults to 0.5.
    pub split_fraction: Option<f64>,
    /// True population moments; required by `pop-oracle` (simulation only).
    pub population: Option<(Vec<f64>, Vec<f64>)>,
    /// The held-out test residual; required by `trans-oracle` (test only).
    pub test_residual: Option<Vec<f64>>,
}

/// A calibration method: residuals and a level in, a threshold rectangle out.
pub trait Calibrator: Send + Sync {
    fn name(&self) -> &'static str;
    fn calibrate(&self, residuals: &ResidualMatrix, alpha: f64) -> Result<ThresholdRectangle>;
}

/// All registered method names, in registry order.
pub fn method_names() -> &'static [&'static str] {
    &[
        "bonferroni",
        "unscaled-max",
        "plugin",
        "split",
        "gwc",
        "tscp",
        "pop-oracle",
        "trans-oracle",
    ]
}

/// Look up a calibrator by name, consuming whatever options it needs.
pub fn build(name: &str, options: &MethodOptions) -> Result<Box<dyn Calibrator>> {
    match name {
        "bonferroni" => Ok(Box::new(Bonferroni)),
        "unscaled-max" => Ok(Box::new(UnscaledMax)),
        "plugin" => Ok(Box::new(PluginStandardized)),
        "split" => {
            let seed = options.seed.ok_or(Error::MissingMethodInput {
                method: "split".into(),
                input: "seed",
            })?;
            Ok(Box::new(SplitStandardized {
                seed,
                split_fraction: options.split_fraction.unwrap_or(0.5),
            }))
        }
        "gwc" => Ok(Box::new(Gwc)),
        "tscp" => Ok(Box::new(Tscp)),
        "pop-oracle" => {
            let (mu, sigma) = options.population.clone().ok_or(Error::MissingMethodInput {
                method: "pop-oracle".into(),
                input: "population moments",
            })?;
            Ok(Box::new(PopulationOracle { mu, sigma }))
        }
        "trans-oracle" => {
            let test_residual =
                options
                    .test_residual
                    .clone()
                    .ok_or(Error::MissingMethodInput {
                        method: "trans-oracle".into(),
                        input: "test residual",
                    })?;
            Ok(Box::new(TransductiveOracle { test_residual }))
        }
        other => Err(Error::UnknownMethod(other.to_string())),
    }
}

/// Per-dimension conformal quantile at the union-bound-corrected level.
struct Bonferroni;

impl Calibrator for Bonferroni {
    fn name(&self) -> &'static str {
        "bonferroni"
    }

    fn calibrate(&self, residuals: &ResidualMatrix, alpha: f64) -> Result<ThresholdRectangle> {
        let d = residuals.d();
        let level = alpha / d as f64;
        let thresholds = (0..d)
            .map(|j| conformal_quantile(&residuals.column(j), level))
            .collect::<Result<Vec<_>>>()?;
        Ok(ThresholdRectangle::new(self.name(), alpha, thresholds))
    }
}

/// One conformal quantile of the row-wise max residual: a cube.
struct UnscaledMax;

impl Calibrator for UnscaledMax {
    fn name(&self) -> &'static str {
        "unscaled-max"
    }

    fn calibrate(&self, residuals: &ResidualMatrix, alpha: f64) -> Result<ThresholdRectangle> {
        let scores: Vec<f64> = (0..residuals.n())
            .map(|i| {
                residuals
                    .row(i)
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let q = conformal_quantile(&scores, alpha)?;
        Ok(ThresholdRectangle::new(
            self.name(),
            alpha,
            vec![q; residuals.d()],
        ))
    }
}

/// Standardize by moments estimated on the same sample that is scored.
/// No finite-sample guarantee: the scores are not exchangeable with a test
/// point's because the moments saw them.
struct PluginStandardized;

impl Calibrator for PluginStandardized {
    fn name(&self) -> &'static str {
        "plugin-heuristic"
    }

    fn calibrate(&self, residuals: &ResidualMatrix, alpha: f64) -> Result<ThresholdRectangle> {
        let n = residuals.n();
        if n < 2 {
            return Err(Error::InvalidInput(
                "plugin standardization needs at least 2 rows".into(),
            ));
        }
        let d = residuals.d();
        let mut mean = Vec::with_capacity(d);
        let mut std = Vec::with_capacity(d);
        for j in 0..d {
            let col = residuals.column(j);
            let m = col.iter().sum::<f64>() / n as f64;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
            let s = v.sqrt();
            if !(s > 0.0) {
                return Err(Error::DegenerateDimension(j));
            }
            mean.push(m);
            std.push(s);
        }
        let scores: Vec<f64> = (0..n)
            .map(|i| standardized_max(residuals.row(i), &mean, &std))
            .collect();
        let q = conformal_quantile(&scores, alpha)?;
        let raw: Vec<f64> = (0..d).map(|j| q * std[j] + mean[j]).collect();
        Ok(ThresholdRectangle::clamped(self.name(), alpha, raw))
    }
}

/// Estimate moments on one random fold, conformalize scores on the other.
struct SplitStandardized {
    seed: u64,
    split_fraction: f64,
}

impl Calibrator for SplitStandardized {
    fn name(&self) -> &'static str {
        "split"
    }

    fn calibrate(&self, residuals: &ResidualMatrix, alpha: f64) -> Result<ThresholdRectangle> {
        let n = residuals.n();
        let d = residuals.d();
        let n1 = (self.split_fraction * n as f64).floor() as usize;
        if n1 < 2 || n1 >= n {
            return Err(Error::InvalidInput(format!(
                "split of {n} rows at fraction {} leaves folds of {n1} and {}",
                self.split_fraction,
                n - n1
            )));
        }
        let mut index: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(&[self.seed, 0x53504c49]));
        index.shuffle(&mut rng);
        let (fold1, fold2) = index.split_at(n1);

        let mut mean = Vec::with_capacity(d);
        let mut std = Vec::with_capacity(d);
        for j in 0..d {
            let m = fold1.iter().map(|&i| residuals.get(i, j)).sum::<f64>() / n1 as f64;
            let v = fold1
                .iter()
                .map(|&i| {
                    let x = residuals.get(i, j) - m;
                    x * x
                })
                .sum::<f64>()
                / (n1 - 1) as f64;
            let s = v.sqrt();
            if !(s > 0.0) {
                return Err(Error::DegenerateDimension(j));
            }
            mean.push(m);
            std.push(s);
        }
        let scores: Vec<f64> = fold2
            .iter()
            .map(|&i| standardized_max(residuals.row(i), &mean, &std))
            .collect();
        // Effective calibration size is the second fold.
        let q = conformal_quantile(&scores, alpha)?;
        let raw: Vec<f64> = (0..d).map(|j| q * std[j] + mean[j]).collect();
        Ok(ThresholdRectangle::clamped(self.name(), alpha, raw))
    }
}

/// Conservative closed-form transductive bound.
struct Gwc;

impl Calibrator for Gwc {
    fn name(&self) -> &'static str {
        "gwc"
    }

    fn calibrate(&self, residuals: &ResidualMatrix, alpha: f64) -> Result<ThresholdRectangle> {
        let r = gwc_calibrate(residuals, alpha)?;
        Ok(ThresholdRectangle::new(self.name(), alpha, r.thresholds))
    }
}

/// The sharp transductive method with local cell bounds.
struct Tscp;

impl Calibrator for Tscp {
    fn name(&self) -> &'static str {
        "tscp"
    }

    fn calibrate(&self, residuals: &ResidualMatrix, alpha: f64) -> Result<ThresholdRectangle> {
        let r = tscp_calibrate(residuals, alpha)?;
        let mut out = ThresholdRectangle::new(self.name(), alpha, r.thresholds);
        if r.used_fallback {
            out.warnings.push("gwc-fallback".into());
        }
        for j in r.zero_coordinates {
            out.warnings.push(format!("degenerate-coordinate-{j}"));
        }
        Ok(out)
    }
}

/// Standardize with the true data-generating moments; simulation only.
struct PopulationOracle {
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl Calibrator for PopulationOracle {
    fn name(&self) -> &'static str {
        "pop-oracle"
    }

    fn calibrate(&self, residuals: &ResidualMatrix, alpha: f64) -> Result<ThresholdRectangle> {
        if self.mu.len() != residuals.d() || self.sigma.len() != residuals.d() {
            return Err(Error::ShapeMismatch(format!(
                "population moments of length {} for {} dimensions",
                self.mu.len(),
                residuals.d()
            )));
        }
        let scores: Vec<f64> = (0..residuals.n())
            .map(|i| standardized_max(residuals.row(i), &self.mu, &self.sigma))
            .collect();
        let q = conformal_quantile(&scores, alpha)?;
        let raw: Vec<f64> = (0..residuals.d())
            .map(|j| q * self.sigma[j] + self.mu[j])
            .collect();
        Ok(ThresholdRectangle::clamped(self.name(), alpha, raw))
    }
}

/// Standardize with moments of the full unordered bag of n+1 residuals,
/// including the held-out test one; test-time only, used to measure the
/// price of transductivity.
struct TransductiveOracle {
    test_residual: Vec<f64>,
}

impl Calibrator for TransductiveOracle {
    fn name(&self) -> &'static str {
        "trans-oracle"
    }

    fn calibrate(&self, residuals: &ResidualMatrix, alpha: f64) -> Result<ThresholdRectangle> {
        let n = residuals.n();
        let d = residuals.d();
        if self.test_residual.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "test residual of length {} for {d} dimensions",
                self.test_residual.len()
            )));
        }
        // Moments over all n+1 residuals: mean over n+1, sigma with divisor n.
        let mut mean = Vec::with_capacity(d);
        let mut std = Vec::with_capacity(d);
        for j in 0..d {
            let col = residuals.column(j);
            let z = self.test_residual[j];
            let m = (col.iter().sum::<f64>() + z) / (n as f64 + 1.0);
            let v = (col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() + (z - m) * (z - m))
                / n as f64;
            let s = v.sqrt();
            if !(s > 0.0) {
                return Err(Error::DegenerateDimension(j));
            }
            mean.push(m);
            std.push(s);
        }
        let scores: Vec<f64> = (0..n)
            .map(|i| standardized_max(residuals.row(i), &mean, &std))
            .collect();
        let q = conformal_quantile(&scores, alpha)?;
        let raw: Vec<f64> = (0..d).map(|j| q * std[j] + mean[j]).collect();
        Ok(ThresholdRectangle::clamped(self.name(), alpha, raw))
    }
}

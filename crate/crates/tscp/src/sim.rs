//! Synthetic-data experiment harness: linear data generation with
//! exchangeable noise variants, OLS model fitting, and repetition
//! orchestration producing coverage/volume summaries per method.

use crate::error::{Error, Result};
use crate::methods::{build, MethodOptions};
use crate::residuals::{absolute_residuals, ModelOutput, ResidualMatrix, Table};
use crate::seed::derive_seed;
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Exp, Normal, StudentT, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

// Role tags for hierarchical seed derivation; adding a role never perturbs
// the streams of existing ones.
const ROLE_XI: u64 = 1;
const ROLE_X: u64 = 2;
const ROLE_NOISE: u64 = 3;
const ROLE_SPLIT: u64 = 4;
// Section tags within a repetition.
const SECTION_TRAIN: u64 = 1;
const SECTION_CAL: u64 = 2;
const SECTION_TEST: u64 = 3;

/// Full description of one synthetic experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Feature dimension.
    #[serde(default = "default_d_x")]
    pub d_x: usize,
    /// Outcome dimension.
    pub d: usize,
    pub n_train: usize,
    pub n_cal: usize,
    pub n_test: usize,
    pub alpha: f64,
    /// Noise variant name; `student-t(df)` carries its parameter inline.
    pub noise: String,
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Reuse one coefficient draw across all repetitions instead of
    /// redrawing per repetition.
    #[serde(default)]
    pub freeze_coefficients: bool,
}

fn default_d_x() -> usize {
    10
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidLevel(self.alpha));
        }
        for (name, v) in [
            ("d_x", self.d_x),
            ("d", self.d),
            ("n_train", self.n_train),
            ("n_cal", self.n_cal),
            ("n_test", self.n_test),
            ("repetitions", self.repetitions),
        ] {
            if v < 1 {
                return Err(Error::InvalidInput(format!("{name} must be at least 1")));
            }
        }
        self.noise_spec()?;
        Ok(())
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        NoiseSpec::parse(&self.noise)
    }
}

/// Noise family applied per outcome dimension; the per-dimension scale is
/// `max(10 - j + 1, 1)` for 1-based `j` except for the homoscedastic
/// Gaussian, which always uses scale 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    GaussianHetero,
    GaussianHomo,
    Laplace,
    Mixture,
    Gamma,
    StudentT(f64),
}

impl NoiseSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let spec = match s {
            "gaussian-hetero" => Self::GaussianHetero,
            "gaussian-homo" => Self::GaussianHomo,
            "laplace" => Self::Laplace,
            "mixture" => Self::Mixture,
            "gamma" => Self::Gamma,
            other => {
                let inner = other
                    .strip_prefix("student-t(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "unknown noise variant `{other}`; expected one of \
                             gaussian-hetero, gaussian-homo, laplace, mixture, gamma, \
                             student-t(df)"
                        ))
                    })?;
                let df: f64 = inner.parse().map_err(|_| {
                    Error::InvalidInput(format!("invalid student-t degrees of freedom `{inner}`"))
                })?;
                if !(df > 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "student-t degrees of freedom must exceed 1, got {df}"
                    )));
                }
                Self::StudentT(df)
            }
        };
        Ok(spec)
    }

    /// Scale for 1-based dimension j.
    pub fn scale(&self, j: usize) -> f64 {
        match self {
            Self::GaussianHomo => 1.0,
            _ => (10.0 - j as f64 + 1.0).max(1.0),
        }
    }

    /// One noise draw for 1-based dimension j.
    fn sample(&self, j: usize, rng: &mut ChaCha12Rng) -> f64 {
        let b = self.scale(j);
        match self {
            Self::GaussianHetero | Self::GaussianHomo => {
                rng.sample(Normal::new(0.0, b).unwrap())
            }
            Self::Laplace => sample_laplace(b, rng),
            Self::Mixture => {
                if rng.gen::<bool>() {
                    sample_laplace(b, rng)
                } else {
                    rng.sample(Normal::new(0.0, b).unwrap())
                }
            }
            // Gamma with shape 1 is the exponential with mean b.
            Self::Gamma => rng.sample(Exp::new(1.0 / b).unwrap()),
            Self::StudentT(df) => b * rng.sample(StudentT::new(*df).unwrap()),
        }
    }

    /// True mean and standard deviation of the absolute residual `|eps_j|`
    /// in each dimension; unavailable when the variance is infinite.
    pub fn population_abs_moments(&self, d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut mean = Vec::with_capacity(d);
        let mut std = Vec::with_capacity(d);
        for j in 1..=d {
            let b = self.scale(j);
            let (m, v) = match self {
                // |N(0, b^2)| is half-normal.
                Self::GaussianHetero | Self::GaussianHomo => {
                    let m = b * (2.0 / std::f64::consts::PI).sqrt();
                    (m, b * b - m * m)
                }
                // |Laplace(b)| is exponential with mean b.
                Self::Laplace => (b, b * b),
                // Even mixture of the two |.| laws above.
                Self::Mixture => {
                    let m_exp = b;
                    let m_hn = b * (2.0 / std::f64::consts::PI).sqrt();
                    let m = 0.5 * (m_exp + m_hn);
                    let second = 0.5 * (2.0 * b * b + b * b);
                    (m, second - m * m)
                }
                // Gamma(1, b) is nonnegative already.
                Self::Gamma => (b, b * b),
                Self::StudentT(_) => {
                    return Err(Error::InvalidInput(
                        "population moments of student-t noise are not finite".into(),
                    ))
                }
            };
            mean.push(m);
            std.push(v.sqrt());
        }
        Ok((mean, std))
    }
}

fn sample_laplace(b: f64, rng: &mut ChaCha12Rng) -> f64 {
    // Inverse CDF from a symmetric uniform.
    let u: f64 = rng.gen::<f64>() - 0.5;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// One labeled sample: features and outcomes, row-aligned.
#[derive(Debug, Clone)]
pub struct DataSet {
    pub x: Table,
    pub y: Table,
}

/// The three folds of one repetition plus the coefficient draw behind them.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub train: DataSet,
    pub cal: DataSet,
    pub test: DataSet,
    pub xi: Vec<f64>,
}

/// Draw one repetition's data: standard-normal features, a shared linear
/// signal `f_j(x) = sum_i xi_i x_i` across outcome dimensions, and additive
/// noise per the variant. Deterministic per (config, rep).
pub fn generate(config: &ExperimentConfig, rep: u64) -> Result<GeneratedData> {
    config.validate()?;
    let noise = config.noise_spec()?;
    let xi_rep = if config.freeze_coefficients { 0 } else { rep };
    let mut xi_rng =
        ChaCha12Rng::seed_from_u64(derive_seed(&[config.seed, xi_rep, ROLE_XI]));
    let unif = Uniform::new(-10.0, 10.0);
    let xi: Vec<f64> = (0..config.d_x).map(|_| xi_rng.sample(unif)).collect();

    let fold = |section: u64, rows: usize| -> DataSet {
        let mut x_rng =
            ChaCha12Rng::seed_from_u64(derive_seed(&[config.seed, rep, section, ROLE_X]));
        let mut e_rng =
            ChaCha12Rng::seed_from_u64(derive_seed(&[config.seed, rep, section, ROLE_NOISE]));
        let mut x = Table::zeros(rows, config.d_x);
        let mut y = Table::zeros(rows, config.d);
        let std_normal = Normal::new(0.0, 1.0).unwrap();
        for i in 0..rows {
            let mut signal = 0.0;
            for k in 0..config.d_x {
                let v = x_rng.sample(std_normal);
                x.set(i, k, v);
                signal += xi[k] * v;
            }
            for j in 0..config.d {
                y.set(i, j, signal + noise.sample(j + 1, &mut e_rng));
            }
        }
        DataSet { x, y }
    };

    Ok(GeneratedData {
        train: fold(SECTION_TRAIN, config.n_train),
        cal: fold(SECTION_CAL, config.n_cal),
        test: fold(SECTION_TEST, config.n_test),
        xi,
    })
}

/// Per-outcome least-squares fit with intercept.
#[derive(Debug, Clone)]
pub struct OlsModel {
    /// `(d_x + 1) x d`; row 0 is the intercept.
    coef: DMatrix<f64>,
}

impl OlsModel {
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coef
    }

    pub fn predict(&self, x: &Table) -> ModelOutput {
        let n = x.rows();
        let d = self.coef.ncols();
        let p = self.coef.nrows() - 1;
        let mut out = Table::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                let mut v = self.coef[(0, j)];
                for k in 0..p {
                    v += self.coef[(k + 1, j)] * x.get(i, k);
                }
                out.set(i, j, v);
            }
        }
        ModelOutput::Point(out)
    }
}

/// Least squares on the intercept-augmented design via SVD, with an
/// explicit rank check: a design whose numerical rank falls short of its
/// column count is rejected rather than silently regularized.
pub fn fit_ols(train: &DataSet) -> Result<OlsModel> {
    let n = train.x.rows();
    let p = train.x.cols();
    let d = train.y.cols();
    let mut design = DMatrix::zeros(n, p + 1);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        for k in 0..p {
            design[(i, k + 1)] = train.x.get(i, k);
        }
    }
    let mut y = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            y[(i, j)] = train.y.get(i, j);
        }
    }
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let eps = max_sv * 1e-10;
    if svd.singular_values.iter().any(|&s| s <= eps) {
        return Err(Error::RankDeficient);
    }
    let coef = svd.solve(&y, eps).map_err(|_| Error::RankDeficient)?;
    Ok(OlsModel { coef })
}

/// One method's outcome on one repetition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub method: String,
    pub coverage: f64,
    /// Product of the thresholds; `inf` when any threshold is infinite.
    pub volume: f64,
    pub seconds: f64,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

/// Cross-repetition aggregate for one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    pub volume_mean: f64,
    pub volume_std: f64,
    pub mean_seconds: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub methods: Vec<MethodSummary>,
    pub records: Vec<RepRecord>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Run the full protocol: per repetition generate, fit, form calibration and
/// test absolute residuals, calibrate each method, and score coverage (all
/// d residuals within the thresholds) and residual-space volume.
/// Repetitions run in parallel; aggregation is an ordered reduce, so the
/// report is deterministic per (config, methods).
pub fn run_experiment(config: &ExperimentConfig, methods: &[String]) -> Result<ExperimentReport> {
    config.validate()?;
    let per_rep: Vec<Vec<RepRecord>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(config, methods, rep))
        .collect::<Result<Vec<_>>>()?;

    let records: Vec<RepRecord> = per_rep.into_iter().flatten().collect();
    let methods_summary = methods
        .iter()
        .map(|m| {
            let ok: Vec<&RepRecord> = records
                .iter()
                .filter(|r| &r.method == m && r.error.is_none())
                .collect();
            let failures = records
                .iter()
                .filter(|r| &r.method == m && r.error.is_some())
                .count();
            let coverages: Vec<f64> = ok.iter().map(|r| r.coverage).collect();
            let volumes: Vec<f64> = ok.iter().map(|r| r.volume).collect();
            let (coverage_mean, coverage_std) = mean_std(&coverages);
            let (volume_mean, volume_std) = mean_std(&volumes);
            let mean_seconds = if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| r.seconds).sum::<f64>() / ok.len() as f64
            };
            MethodSummary {
                method: m.clone(),
                coverage_mean,
                coverage_std,
                volume_mean,
                volume_std,
                mean_seconds,
                failures,
            }
        })
        .collect();

    Ok(ExperimentReport {
        config: config.clone(),
        methods: methods_summary,
        records,
    })
}

fn run_repetition(
    config: &ExperimentConfig,
    methods: &[String],
    rep: usize,
) -> Result<Vec<RepRecord>> {
    let data = generate(config, rep as u64)?;
    let model = fit_ols(&data.train)?;
    let cal_pred = model.predict(&data.cal.x);
    let test_pred = model.predict(&data.test.x);
    let cal_residuals = absolute_residuals(&data.cal.y, &cal_pred)?;
    let test_residuals = absolute_residuals(&data.test.y, &test_pred)?;
    let noise = config.noise_spec()?;

    let mut out = Vec::with_capacity(methods.len());
    for m in methods {
        let start = Instant::now();
        let record = score_method(
            config,
            &noise,
            m,
            rep,
            &cal_residuals,
            &test_residuals,
        );
        let seconds = start.elapsed().as_secs_f64();
        out.push(match record {
            Ok((coverage, volume, warnings)) => RepRecord {
                rep,
                method: m.clone(),
                coverage,
                volume,
                seconds,
                warnings,
                error: None,
            },
            Err(e) => RepRecord {
                rep,
                method: m.clone(),
                coverage: f64::NAN,
                volume: f64::NAN,
                seconds,
                warnings: Vec::new(),
                error: Some(e.to_string()),
            },
        });
    }
    Ok(out)
}

fn score_method(
    config: &ExperimentConfig,
    noise: &NoiseSpec,
    method: &str,
    rep: usize,
    cal: &ResidualMatrix,
    test: &ResidualMatrix,
) -> Result<(f64, f64, Vec<String>)> {
    let n_test = test.n();
    if method == "trans-oracle" {
        // The oracle recalibrates per test point: it must see the held-out
        // residual. Volume reported is the mean over test points.
        let mut covered = 0usize;
        let mut volume_sum = 0.0f64;
        for i in 0..n_test {
            let opts = MethodOptions {
                test_residual: Some(test.row(i).to_vec()),
                ..Default::default()
            };
            let r = build(method, &opts)?.calibrate(cal, config.alpha)?;
            if test
                .row(i)
                .iter()
                .zip(r.thresholds.iter())
                .all(|(e, w)| e <= w)
            {
                covered += 1;
            }
            volume_sum += r.thresholds.iter().product::<f64>();
        }
        return Ok((
            covered as f64 / n_test as f64,
            volume_sum / n_test as f64,
            Vec::new(),
        ));
    }

    let mut opts = MethodOptions {
        seed: Some(derive_seed(&[config.seed, rep as u64, ROLE_SPLIT])),
        ..Default::default()
    };
    if method == "pop-oracle" {
        opts.population = Some(noise.population_abs_moments(config.d)?);
    }
    let r = build(method, &opts)?.calibrate(cal, config.alpha)?;
    let covered = (0..n_test)
        .filter(|&i| {
            test.row(i)
                .iter()
                .zip(r.thresholds.iter())
                .all(|(e, w)| e <= w)
        })
        .count();
    let volume = r.thresholds.iter().product::<f64>();
    Ok((covered as f64 / n_test as f64, volume, r.warnings))
}

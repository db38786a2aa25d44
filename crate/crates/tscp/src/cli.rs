//! Batch command-line front end: calibrate thresholds from residual files,
//! turn thresholds plus predictions into interval files, run the synthetic
//! benchmark, cross-check the closed forms against the numeric oracles, and
//! emit generated datasets.
//!
//! Exit codes: 0 success, 1 verification tolerance exceeded, 2 malformed
//! CSV/config, 3 dimension/kind mismatch, 4 usage error (e.g. a gated
//! oracle method without its input), 5 enumeration budget exceeded.

use crate::error::Error;
use crate::link::{critical_radius, omega, LinkContext};
use crate::methods::{build, method_names, MethodOptions, ThresholdRectangle};
use crate::oracles::{
    enumerate_boundaries_with_budget, gwc_sup_grid, lwc_extrema_grid, omega_bisection,
    DEFAULT_CELL_BUDGET,
};
use crate::residuals::{invert_rectangle, jitter, ModelOutput, ResidualMatrix, Table};
use crate::sim::{generate, run_experiment, ExperimentConfig};
use crate::stats::ScalingParams;
use crate::tscp::{phi_gwc, tscp_calibrate, LwcEngine};
use clap::{Args, Parser, Subcommand};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const EXIT_TOLERANCE: i32 = 1;
const EXIT_PARSE: i32 = 2;
const EXIT_MISMATCH: i32 = 3;
const EXIT_USAGE: i32 = 4;
const EXIT_BUDGET: i32 = 5;

#[derive(Parser)]
#[command(name = "tscp", version, about = "Rectangular conformal calibration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate per-dimension thresholds from a residuals CSV.
    Calibrate(CalibrateArgs),
    /// Combine a thresholds file with predictions into intervals.
    Predict(PredictArgs),
    /// Run the synthetic coverage/volume benchmark from a config file.
    Benchmark(BenchmarkArgs),
    /// Cross-check closed forms against the slow numeric oracles.
    Verify(VerifyArgs),
    /// Emit one repetition's generated datasets as CSV files.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct CalibrateArgs {
    /// Residuals CSV with header e1,...,ed.
    residuals: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    method: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split_fraction: Option<f64>,
    /// Comma-separated test residual (trans-oracle only).
    #[arg(long)]
    test_residual: Option<String>,
    /// Break within-column ties with noise of this relative scale.
    #[arg(long)]
    jitter_scale: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Thresholds CSV produced by `calibrate`.
    thresholds: PathBuf,
    /// Predictions CSV: header f1,...,fd (point) or lo1,hi1,... (quantile).
    predictions: PathBuf,
    /// Shift constant used when the quantile residuals were built.
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated method names; defaults to all non-oracle methods.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_CELL_BUDGET)]
    budget: u128,
    #[arg(long)]
    seed: Option<u64>,
    /// Override every check's tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Repetition index to emit.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving train.csv, cal.csv, test.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

/// A failure carrying its process exit code.
struct CliError {
    code: i32,
    message: String,
}

type CliResult<T> = std::result::Result<T, CliError>;

fn fail<T>(code: i32, message: impl Into<String>) -> CliResult<T> {
    Err(CliError {
        code,
        message: message.into(),
    })
}

fn lift(e: Error) -> CliError {
    let code = match &e {
        Error::DegenerateDimension(_) | Error::ShapeMismatch(_) => EXIT_MISMATCH,
        Error::MissingMethodInput { .. } | Error::UnknownMethod(_) | Error::InvalidLevel(_) => {
            EXIT_USAGE
        }
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_PARSE,
    };
    CliError {
        code,
        message: e.to_string(),
    }
}

fn io_err(e: std::io::Error, path: &Path) -> CliError {
    CliError {
        code: EXIT_PARSE,
        message: format!("{}: {e}", path.display()),
    }
}

/// Parse args from the process environment and run; returns the exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config_digest: String,
    seed: u64,
    version: String,
    methods: Vec<ManifestMethod>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct ManifestMethod {
    name: String,
    thresholds: Vec<f64>,
    warnings: Vec<String>,
}

fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| io_err(e, path))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> CliResult<()> {
    let mut path = out.as_os_str().to_owned();
    path.push(".manifest.json");
    let path = PathBuf::from(path);
    let body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(&path, body).map_err(|e| io_err(e, &path))
}

fn effective_seed(seed: Option<u64>) -> u64 {
    // No seed given: record one from OS entropy so the run stays traceable.
    seed.unwrap_or_else(|| rand::thread_rng().gen())
}

fn parse_float(field: &str, context: &str) -> CliResult<f64> {
    match field {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other
            .trim()
            .parse()
            .map_err(|_| CliError {
                code: EXIT_PARSE,
                message: format!("{context}: cannot parse `{other}` as a number"),
            }),
    }
}

fn format_float(v: f64) -> String {
    // Rust's shortest round-trip formatting already emits `inf` / `-inf`.
    format!("{v}")
}

/// Read a CSV into a table, checking the expected header prefix-per-column.
fn read_table(path: &Path, header_stem: Option<&str>) -> CliResult<(Vec<String>, Table)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError {
            code: EXIT_PARSE,
            message: format!("{}: {e}", path.display()),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError {
            code: EXIT_PARSE,
            message: format!("{}: {e}", path.display()),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return fail(EXIT_PARSE, format!("{}: empty header", path.display()));
    }
    if let Some(stem) = header_stem {
        for (k, h) in headers.iter().enumerate() {
            let expected = format!("{stem}{}", k + 1);
            if h != &expected {
                return fail(
                    EXIT_PARSE,
                    format!(
                        "{}: header column {} is `{h}`, expected `{expected}`",
                        path.display(),
                        k + 1
                    ),
                );
            }
        }
    }
    let d = headers.len();
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError {
            code: EXIT_PARSE,
            message: format!("{}: {e}", path.display()),
        })?;
        if record.len() != d {
            return fail(
                EXIT_PARSE,
                format!(
                    "{}: row {} has {} fields, expected {d}",
                    path.display(),
                    line + 2,
                    record.len()
                ),
            );
        }
        for (col, field) in record.iter().enumerate() {
            values.push(parse_float(
                field,
                &format!("{}: row {}, column {}", path.display(), line + 2, col + 1),
            )?);
        }
        rows += 1;
    }
    if rows == 0 {
        return fail(EXIT_PARSE, format!("{}: no data rows", path.display()));
    }
    let table = Table::new(values, rows, d).map_err(lift)?;
    Ok((headers, table))
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut body = String::new();
    let _ = writeln!(body, "{}", header.join(","));
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        let _ = writeln!(body, "{}", line.join(","));
    }
    std::fs::write(path, body).map_err(|e| io_err(e, path))
}

fn cmd_calibrate(a: CalibrateArgs) -> CliResult<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return fail(EXIT_USAGE, format!("alpha must lie in (0, 1), got {}", a.alpha));
    }
    let (_, table) = read_table(&a.residuals, Some("e"))?;
    let mut residuals = ResidualMatrix::new(table).map_err(|e| CliError {
        code: EXIT_PARSE,
        message: e.to_string(),
    })?;
    let seed = effective_seed(a.seed);
    if let Some(scale) = a.jitter_scale {
        residuals = jitter(&residuals, scale, seed).map_err(lift)?;
    }
    let test_residual = match &a.test_residual {
        None => None,
        Some(raw) => Some(
            raw.split(',')
                .map(|f| parse_float(f, "--test-residual"))
                .collect::<CliResult<Vec<f64>>>()?,
        ),
    };
    let opts = MethodOptions {
        seed: Some(seed),
        split_fraction: a.split_fraction,
        population: None,
        test_residual,
    };
    let calibrator = build(&a.method, &opts).map_err(lift)?;
    let rect = calibrator.calibrate(&residuals, a.alpha).map_err(lift)?;
    write_thresholds(&a.out, &rect)?;
    let manifest = RunManifest {
        command: "calibrate".into(),
        config_digest: sha256_file(&a.residuals)?,
        seed,
        version: env!("CARGO_PKG_VERSION").into(),
        methods: vec![ManifestMethod {
            name: rect.method.clone(),
            thresholds: rect.thresholds.clone(),
            warnings: rect.warnings.clone(),
        }],
        warnings: rect.warnings.clone(),
    };
    write_manifest(&a.out, &manifest)
}

fn write_thresholds(path: &Path, rect: &ThresholdRectangle) -> CliResult<()> {
    let header: Vec<String> = (1..=rect.thresholds.len()).map(|j| format!("w{j}")).collect();
    write_csv(path, &header, &[rect.thresholds.clone()])
}

fn read_thresholds(path: &Path) -> CliResult<Vec<f64>> {
    let (_, table) = read_table(path, Some("w"))?;
    if table.rows() != 1 {
        return fail(
            EXIT_PARSE,
            format!("{}: thresholds file must have exactly one row", path.display()),
        );
    }
    Ok(table.row(0).to_vec())
}

fn cmd_predict(a: PredictArgs) -> CliResult<()> {
    let thresholds = read_thresholds(&a.thresholds)?;
    let d = thresholds.len();
    let (headers, table) = read_table(&a.predictions, None)?;
    let point_headers: Vec<String> = (1..=d).map(|j| format!("f{j}")).collect();
    let quantile_headers: Vec<String> = (1..=d)
        .flat_map(|j| [format!("lo{j}"), format!("hi{j}")])
        .collect();
    let model = if headers == point_headers {
        ModelOutput::Point(table)
    } else if headers == quantile_headers {
        let rows = table.rows();
        let mut lo = Table::zeros(rows, d);
        let mut hi = Table::zeros(rows, d);
        for i in 0..rows {
            for j in 0..d {
                lo.set(i, j, table.get(i, 2 * j));
                hi.set(i, j, table.get(i, 2 * j + 1));
            }
        }
        ModelOutput::Quantile {
            lo,
            hi,
            shift: a.shift,
        }
    } else {
        return fail(
            EXIT_MISMATCH,
            format!(
                "{}: header matches neither f1..f{d} nor lo1,hi1,..,lo{d},hi{d}",
                a.predictions.display()
            ),
        );
    };
    let mut rows = Vec::with_capacity(model.rows());
    let mut clamped_total = 0usize;
    for i in 0..model.rows() {
        let (rect, clamped) = invert_rectangle(&thresholds, &model, i).map_err(lift)?;
        clamped_total += clamped;
        let mut row = Vec::with_capacity(2 * d);
        for j in 0..d {
            row.push(rect.lower[j]);
            row.push(rect.upper[j]);
        }
        rows.push(row);
    }
    let header: Vec<String> = (1..=d)
        .flat_map(|j| [format!("lo{j}"), format!("hi{j}")])
        .collect();
    write_csv(&a.out, &header, &rows)?;
    let mut warnings = Vec::new();
    if clamped_total > 0 {
        warnings.push(format!("interval-radius-clamped-{clamped_total}"));
    }
    let manifest = RunManifest {
        command: "predict".into(),
        config_digest: sha256_file(&a.predictions)?,
        seed: 0,
        version: env!("CARGO_PKG_VERSION").into(),
        methods: Vec::new(),
        warnings,
    };
    write_manifest(&a.out, &manifest)
}

fn read_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(e, path))?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| CliError {
        code: EXIT_PARSE,
        message: format!("{}: {e}", path.display()),
    })?;
    config.validate().map_err(|e| CliError {
        code: EXIT_PARSE,
        message: e.to_string(),
    })?;
    Ok(config)
}

fn cmd_benchmark(a: BenchmarkArgs) -> CliResult<()> {
    let mut config = read_config(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let methods: Vec<String> = match &a.methods {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => method_names()
            .iter()
            .filter(|m| !m.ends_with("oracle"))
            .map(|m| m.to_string())
            .collect(),
    };
    for m in &methods {
        if !method_names().contains(&m.as_str()) {
            return fail(EXIT_USAGE, format!("unknown method `{m}`"));
        }
    }
    let report = run_experiment(&config, &methods).map_err(lift)?;
    let mut body = String::new();
    let _ = writeln!(
        body,
        "n,d,noise,method,coverage_mean,coverage_std,volume_mean,volume_std,failures"
    );
    for m in &report.methods {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{},{}",
            config.n_cal,
            config.d,
            config.noise,
            m.method,
            format_float(m.coverage_mean),
            format_float(m.coverage_std),
            format_float(m.volume_mean),
            format_float(m.volume_std),
            m.failures
        );
    }
    std::fs::write(&a.out, body).map_err(|e| io_err(e, &a.out))?;
    let warnings: Vec<String> = report
        .records
        .iter()
        .flat_map(|r| r.warnings.iter().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let manifest = RunManifest {
        command: "benchmark".into(),
        config_digest: sha256_file(&a.config)?,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        methods: Vec::new(),
        warnings,
    };
    write_manifest(&a.out, &manifest)
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    let mut config = read_config(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let data = generate(&config, a.rep).map_err(lift)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| io_err(e, &a.out_dir))?;
    for (name, set) in [
        ("train", &data.train),
        ("cal", &data.cal),
        ("test", &data.test),
    ] {
        let mut header: Vec<String> = (1..=config.d_x).map(|k| format!("x{k}")).collect();
        header.extend((1..=config.d).map(|j| format!("y{j}")));
        let rows: Vec<Vec<f64>> = (0..set.x.rows())
            .map(|i| {
                let mut row: Vec<f64> = set.x.row(i).to_vec();
                row.extend_from_slice(set.y.row(i));
                row
            })
            .collect();
        let path = a.out_dir.join(format!("{name}.csv"));
        write_csv(&path, &header, &rows)?;
    }
    let manifest = RunManifest {
        command: "simulate".into(),
        config_digest: sha256_file(&a.config)?,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        methods: Vec::new(),
        warnings: Vec::new(),
    };
    write_manifest(&a.out_dir.join("data"), &manifest)
}

struct Check {
    name: &'static str,
    max_deviation: f64,
    tolerance: f64,
    detail: String,
}

impl Check {
    fn pass(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

fn cmd_verify(a: VerifyArgs) -> CliResult<()> {
    let seed = effective_seed(a.seed);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // 1. Link closed form vs bisection.
    let mut max_dev = 0.0f64;
    let mut detail = String::new();
    for k in 0..200 {
        let n = rng.gen_range(3..=40);
        let ctx = LinkContext::new(ScalingParams {
            n,
            mean: vec![rng.gen::<f64>() * 3.0 + 0.2],
            std: vec![rng.gen::<f64>() * 2.0 + 0.1],
        });
        let c = (rng.gen::<f64>() * 2.0 - 1.0) * critical_radius(n) * 0.98;
        let closed = omega(&ctx, c, 0);
        let numeric = omega_bisection(&ctx, c, 0);
        let dev = if closed.is_infinite() && numeric.is_infinite() {
            0.0
        } else {
            (closed - numeric).abs() / (1.0 + closed.abs())
        };
        if dev > max_dev {
            max_dev = dev;
            detail = format!("instance {k}: n={n} c={c}");
        }
    }
    checks.push(Check {
        name: "link-inverse-vs-bisection",
        max_deviation: max_dev,
        tolerance: a.tolerance.unwrap_or(1e-8),
        detail,
    });

    // 2. Worst-case score closed form vs grid supremum.
    let mut max_dev = 0.0f64;
    let mut detail = String::new();
    for k in 0..20 {
        let n = rng.gen_range(4..=25);
        let d = 2;
        let ctx = LinkContext::new(ScalingParams {
            n,
            mean: (0..d).map(|_| rng.gen::<f64>() * 3.0 + 0.2).collect(),
            std: (0..d).map(|_| rng.gen::<f64>() * 2.0 + 0.1).collect(),
        });
        let t: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 6.0).collect();
        let closed = phi_gwc(&ctx, &t);
        let numeric = (0..d)
            .map(|j| gwc_sup_grid(&ctx, &t, j))
            .fold(f64::NEG_INFINITY, f64::max);
        let dev = (closed - numeric).abs() / (1.0 + closed.abs());
        if dev > max_dev {
            max_dev = dev;
            detail = format!("instance {k}: n={n}");
        }
    }
    checks.push(Check {
        name: "worst-case-score-vs-grid",
        max_deviation: max_dev,
        tolerance: a.tolerance.unwrap_or(1e-6),
        detail,
    });

    // 3. Local transformation extrema vs grid.
    let mut max_dev = 0.0f64;
    let mut detail = String::new();
    let mut done = 0;
    while done < 20 {
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..8).map(|_| rng.gen::<f64>() * 5.0 + 1e-3).collect())
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        let m = ResidualMatrix::from_columns(&refs).map_err(lift)?;
        let engine = LwcEngine::new(&m, 0.3).map_err(lift)?;
        let h = engine.mean_index();
        if !engine.cell_nonempty(&h) {
            continue;
        }
        let t: Vec<f64> = (0..2).map(|_| rng.gen::<f64>() * 5.0).collect();
        let closed = engine.phi_lwc(&t, &h).map_err(lift)?;
        let numeric = (0..2)
            .map(|j| {
                let (sup, inf) = lwc_extrema_grid(&engine, &h, j, t[j]);
                sup - inf
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let dev = (closed - numeric).abs() / (1.0 + closed.abs());
        if dev > max_dev {
            max_dev = dev;
            detail = format!("instance {done}");
        }
        done += 1;
    }
    checks.push(Check {
        name: "local-transformation-vs-grid",
        max_deviation: max_dev,
        tolerance: a.tolerance.unwrap_or(1e-6),
        detail,
    });

    // 4. Boundary search vs full enumeration.
    let mut max_dev = 0.0f64;
    let mut detail = String::new();
    for k in 0..25 {
        let n = rng.gen_range(5..=9);
        let d = rng.gen_range(1..=2);
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..n).map(|_| rng.gen::<f64>() * 5.0 + 1e-3).collect())
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        let m = ResidualMatrix::from_columns(&refs).map_err(lift)?;
        let report = enumerate_boundaries_with_budget(&m, 0.2, a.budget).map_err(lift)?;
        let fast = tscp_calibrate(&m, 0.2).map_err(lift)?;
        if fast.used_fallback {
            continue;
        }
        for j in 0..d {
            let dev = (report.boundaries[j] - fast.thresholds[j]).abs();
            if dev > max_dev {
                max_dev = dev;
                detail = format!("instance {k}: n={n} d={d} j={j}");
            }
        }
    }
    checks.push(Check {
        name: "boundary-search-vs-enumeration",
        max_deviation: max_dev,
        tolerance: a.tolerance.unwrap_or(1e-9),
        detail,
    });

    let mut body = String::new();
    let mut all_pass = true;
    for c in &checks {
        all_pass &= c.pass();
        let _ = writeln!(
            body,
            "{}: max deviation {:e} (tolerance {:e}) {}{}",
            c.name,
            c.max_deviation,
            c.tolerance,
            if c.pass() { "PASS" } else { "FAIL" },
            if c.pass() || c.detail.is_empty() {
                String::new()
            } else {
                format!(" at {}", c.detail)
            }
        );
    }
    print!("{body}");
    if let Some(out) = &a.out {
        std::fs::write(out, &body).map_err(|e| io_err(e, out))?;
    }
    if all_pass {
        Ok(())
    } else {
        fail(EXIT_TOLERANCE, "verification tolerance exceeded")
    }
}

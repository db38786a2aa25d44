//! Generalized residuals: turning model predictions and outcomes into the
//! nonnegative, tie-free residual matrices the calibrators consume, and
//! inverting calibrated thresholds back into outcome-space rectangles.

use crate::error::{Error, Result};
use crate::seed::derive_seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Dense row-major `n x d` table of reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Table {
    pub fn new(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot fill a {rows}x{cols} table",
                values.len()
            )));
        }
        Ok(Self { values, rows, cols })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            values: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

/// `n x d` table of nonnegative generalized residuals.
///
/// The `jittered` flag records whether within-column distinctness has been
/// enforced; the transductive calibrators require it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualMatrix {
    values: Table,
    jittered: bool,
}

impl ResidualMatrix {
    pub fn new(values: Table) -> Result<Self> {
        for i in 0..values.rows() {
            for j in 0..values.cols() {
                let v = values.get(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "residual at row {i}, column {j} is {v}; residuals must be finite and nonnegative"
                    )));
                }
            }
        }
        Ok(Self {
            values,
            jittered: false,
        })
    }

    pub fn from_columns(cols: &[&[f64]]) -> Result<Self> {
        let n = cols.first().map_or(0, |c| c.len());
        let d = cols.len();
        let mut table = Table::zeros(n, d);
        for (j, col) in cols.iter().enumerate() {
            if col.len() != n {
                return Err(Error::ShapeMismatch("ragged columns".into()));
            }
            for (i, &v) in col.iter().enumerate() {
                table.set(i, j, v);
            }
        }
        Self::new(table)
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn d(&self) -> usize {
        self.values.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j)
    }

    pub fn table(&self) -> &Table {
        &self.values
    }

    pub fn jittered(&self) -> bool {
        self.jittered
    }

    /// True when every column has pairwise-distinct entries.
    pub fn columns_distinct(&self) -> bool {
        (0..self.d()).all(|j| {
            let mut col = self.column(j);
            col.sort_by(f64::total_cmp);
            col.windows(2).all(|w| w[0] < w[1])
        })
    }
}

/// Predictions from a pre-trained model, consumed as tables rather than as
/// callable objects so the library stays model-agnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelOutput {
    /// Conditional-mean predictions `f̂_j(X^i)`.
    Point(Table),
    /// Conditional-quantile predictions with the nonnegativity shift applied
    /// to the quantile residuals (0 when none was needed).
    Quantile { lo: Table, hi: Table, shift: f64 },
}

impl ModelOutput {
    pub fn rows(&self) -> usize {
        match self {
            ModelOutput::Point(t) => t.rows(),
            ModelOutput::Quantile { lo, .. } => lo.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            ModelOutput::Point(t) => t.cols(),
            ModelOutput::Quantile { lo, .. } => lo.cols(),
        }
    }
}

/// Cartesian product of per-dimension prediction intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRectangle {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl OutcomeRectangle {
    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// How quantile-regression residuals are made nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CqrMode {
    /// `max{raw, 0}`; more conservative than shifting.
    Truncate,
    /// `raw + c`; invertible, but errors if any shifted residual stays negative.
    Shift(f64),
}

/// Absolute mean-regression residuals `|Y_j - f̂_j(X)|`.
pub fn absolute_residuals(outcomes: &Table, model: &ModelOutput) -> Result<ResidualMatrix> {
    let ModelOutput::Point(pred) = model else {
        return Err(Error::ShapeMismatch(
            "absolute residuals require point predictions".into(),
        ));
    };
    check_shapes(outcomes, pred)?;
    let mut table = Table::zeros(outcomes.rows(), outcomes.cols());
    for i in 0..outcomes.rows() {
        for j in 0..outcomes.cols() {
            table.set(i, j, (outcomes.get(i, j) - pred.get(i, j)).abs());
        }
    }
    ResidualMatrix::new(table)
}

/// Quantile-regression residuals `max{lo - Y, Y - hi}`, made nonnegative by
/// truncation or by a constant shift.
pub fn cqr_residuals(
    outcomes: &Table,
    model: &ModelOutput,
    mode: CqrMode,
) -> Result<ResidualMatrix> {
    let ModelOutput::Quantile { lo, hi, .. } = model else {
        return Err(Error::ShapeMismatch(
            "quantile residuals require lo/hi predictions".into(),
        ));
    };
    check_shapes(outcomes, lo)?;
    check_shapes(outcomes, hi)?;
    let mut table = Table::zeros(outcomes.rows(), outcomes.cols());
    for i in 0..outcomes.rows() {
        for j in 0..outcomes.cols() {
            let y = outcomes.get(i, j);
            let raw = (lo.get(i, j) - y).max(y - hi.get(i, j));
            let value = match mode {
                CqrMode::Truncate => raw.max(0.0),
                CqrMode::Shift(c) => {
                    let shifted = raw + c;
                    if shifted < 0.0 {
                        return Err(Error::ShiftTooSmall {
                            shift: c,
                            min_raw: raw,
                        });
                    }
                    shifted
                }
            };
            table.set(i, j, value);
        }
    }
    ResidualMatrix::new(table)
}

/// Smallest shift making these calibration residuals nonnegative, plus a 1%
/// margin.
pub fn suggest_shift(outcomes: &Table, model: &ModelOutput) -> Result<f64> {
    let ModelOutput::Quantile { lo, hi, .. } = model else {
        return Err(Error::ShapeMismatch(
            "shift suggestion requires lo/hi predictions".into(),
        ));
    };
    let mut min_raw = f64::INFINITY;
    for i in 0..outcomes.rows() {
        for j in 0..outcomes.cols() {
            let y = outcomes.get(i, j);
            let raw = (lo.get(i, j) - y).max(y - hi.get(i, j));
            min_raw = min_raw.min(raw);
        }
    }
    Ok((-min_raw).max(0.0) * 1.01)
}

/// Break within-column ties by adding uniform noise on `[0, scale * u_j]`,
/// where `u_j` is the column's smallest nonzero gap (or `scale` itself for a
/// constant column). Deterministic per seed; ranks of clearly-separated
/// residuals never change with the default gap-relative scale.
pub fn jitter(matrix: &ResidualMatrix, scale: f64, seed: u64) -> Result<ResidualMatrix> {
    if !(scale > 0.0) {
        return Err(Error::InvalidInput(format!(
            "jitter scale must be positive, got {scale}"
        )));
    }
    let n = matrix.n();
    let d = matrix.d();
    let mut table = Table::zeros(n, d);
    for j in 0..d {
        let col = matrix.column(j);
        let mut sorted = col.clone();
        sorted.sort_by(f64::total_cmp);
        let min_gap = sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|g| *g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let unit = if min_gap.is_finite() { min_gap } else { scale };
        // Redraw the whole column on the (measure-zero) chance of a residual tie.
        let mut attempt = 0u64;
        loop {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(&[seed, j as u64, attempt]));
            let noisy: Vec<f64> = col.iter().map(|v| v + rng.gen::<f64>() * scale * unit).collect();
            let mut check = noisy.clone();
            check.sort_by(f64::total_cmp);
            if check.windows(2).all(|w| w[0] < w[1]) {
                for (i, v) in noisy.into_iter().enumerate() {
                    table.set(i, j, v);
                }
                break;
            }
            attempt += 1;
        }
    }
    let mut out = ResidualMatrix::new(table)?;
    out.jittered = true;
    Ok(out)
}

/// Map calibrated residual-space thresholds back to an outcome-space
/// rectangle for one test row. Returns the rectangle and the number of
/// dimensions where a too-small effective radius had to be clamped.
pub fn invert_rectangle(
    thresholds: &[f64],
    model: &ModelOutput,
    row: usize,
) -> Result<(OutcomeRectangle, usize)> {
    if thresholds.len() != model.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{} thresholds for {} output dimensions",
            thresholds.len(),
            model.cols()
        )));
    }
    let d = thresholds.len();
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    let mut clamped = 0usize;
    for j in 0..d {
        let w = thresholds[j];
        match model {
            ModelOutput::Point(pred) => {
                let f = pred.get(row, j);
                lower.push(f - w);
                upper.push(f + w);
            }
            ModelOutput::Quantile { lo, hi, shift } => {
                let l = lo.get(row, j);
                let h = hi.get(row, j);
                let mut radius = w - shift;
                // A radius below -(hi-lo)/2 would invert the interval.
                let floor = -(h - l) / 2.0;
                if radius < floor {
                    radius = floor;
                    clamped += 1;
                }
                lower.push(l - radius);
                upper.push(h + radius);
            }
        }
    }
    Ok((OutcomeRectangle { lower, upper }, clamped))
}

fn check_shapes(a: &Table, b: &Table) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} outcomes vs {}x{} predictions",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

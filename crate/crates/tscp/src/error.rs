use thiserror::Error;

/// Errors shared by all calibration routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("miscoverage level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),

    #[error("residual column {0} has zero sample variance")]
    DegenerateDimension(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("shift constant {shift} leaves negative residuals (most negative raw residual: {min_raw})")]
    ShiftTooSmall { shift: f64, min_raw: f64 },

    #[error("partition cell {0:?} is empty")]
    EmptyCell(Vec<usize>),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("enumeration budget exceeded: instance has {cells} cells, budget is {budget}")]
    BudgetExceeded { cells: u128, budget: u128 },

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("method `{method}` requires {input}")]
    MissingMethodInput {
        method: &'static str,
        input: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("sandwich hypothesis fails at n = {n}: {reason}")]
    SandwichHypothesis { n: usize, reason: String },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("zero-variance column(s): {columns:?}")]
    ZeroVariance { columns: Vec<usize> },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no closed-form tail for {0}")]
    NoClosedForm(String),

    #[error("unknown tail exponent for {0}")]
    UnknownTailExponent(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("monte carlo estimate refused: {0}")]
    Refused(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("trend assertion needs at least {need} grid points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

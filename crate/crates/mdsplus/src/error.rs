use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,

    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asym:e} exceeds {tol:e}")]
    NotSymmetric { max_asym: f64, tol: f64 },

    #[error("invalid distance matrix: {0}")]
    InvalidDistances(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the map's domain: {0}")]
    OutOfDomain(String),

    #[error("too few samples to estimate noise (n = {n}, need at least 8)")]
    TooFewSamples { n: usize },

    #[error("csv parse error on line {line}: {msg}")]
    CsvParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

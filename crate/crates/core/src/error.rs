use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse error: {0}")]
    Csv(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("unknown target {0:?}")]
    UnknownTarget(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("estimation failed for variable {variable}: {message}")]
    Estimation { variable: String, message: String },
    #[error("solver did not converge after {iterations} iterations (gap {gap:.3e} bits, best unique information {best_value:.6} bits)")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        best_value: f64,
        best: Box<crate::pid::TripleDistribution>,
    },
    #[error("budget exceeded: {0}")]
    Budget(String),
}

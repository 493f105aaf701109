use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("I/O error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("unsupported dtype {0:?} (expected little-endian float32 or float64)")]
    UnsupportedDtype(String),

    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("ragged CSV: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("parse error at row {row}, column {col}: cannot read {text:?} as a number")]
    Parse { row: usize, col: usize, text: String },

    #[error("empty matrix: {0}")]
    Empty(String),

    #[error("dimension mismatch: {context} (expected {expected}, found {found})")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("archive format version {found} is not supported (this build reads version {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt archive: {0}")]
    CorruptArchive(String),

    #[error("not enough rows: {context} needs at least {needed}, got {got}")]
    TooFewRows {
        context: String,
        needed: usize,
        got: usize,
    },

    #[error("regularized covariance is not positive definite (pivot {pivot} = {value:e}); raise the regularization constant C (currently {reg_c})")]
    NotPositiveDefinite { pivot: usize, value: f64, reg_c: f64 },

    #[error("row {row} has near-zero L2 norm {norm:e} and cannot be normalized")]
    ZeroNorm { row: usize, norm: f64 },

    #[error("row {row} is not unit-normalized (norm {norm})")]
    NotNormalized { row: usize, norm: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("detector has no calibrated threshold")]
    Uncalibrated,

    #[error("missing column {0:?} in scores table")]
    MissingColumn(String),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }

    /// Whether the error stems from invalid user-supplied settings rather than from data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}

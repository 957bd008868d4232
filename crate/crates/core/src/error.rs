use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("series must contain at least 2 observations, got {0}")]
    SeriesTooShort(usize),

    #[error("series contains a non-finite value at observation {row}, coordinate {col}")]
    NonFinite { row: usize, col: usize },

    #[error("block length {block} is not usable for a series of length {n}")]
    InvalidBlockLength { block: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ratio statistic evaluated with denominator {0:e} too close to zero")]
    DegenerateDenominator(f64),

    #[error("B0 = sum |k| r(k) vanishes; the process violates the bias non-degeneracy condition")]
    ZeroBias,

    #[error("model has no analytic ground truth (lag-paired series)")]
    NoAnalyticTruth,

    #[error("empty block grid for subsample length {m} and K = {k}")]
    EmptyGrid { m: usize, k: f64 },

    #[error("empty MSE curve")]
    EmptyCurve,

    #[error("estimation degenerate: {0}")]
    Degenerate(String),

    #[error("rate fit needs at least 3 points, got {0}")]
    InsufficientPoints(usize),

    #[error("rate fit needs strictly positive errors (point {index} is {value})")]
    NonPositiveError { index: usize, value: f64 },

    #[error("config error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("method {method} degenerate in {rate:.1}% of replicates at n = {n}; tuning is likely invalid")]
    DegeneracyAbort { method: String, n: usize, rate: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv input, line {line}: {message}")]
    Csv { line: u64, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the user's configuration or input rather than by estimation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ConfigParse { .. }
                | Error::Config { .. }
                | Error::InvalidParameter(_)
                | Error::InvalidBlockLength { .. }
                | Error::EmptyGrid { .. }
                | Error::DimensionMismatch { .. }
                | Error::Csv { .. }
                | Error::SeriesTooShort(_)
                | Error::NonFinite { .. }
        )
    }
}

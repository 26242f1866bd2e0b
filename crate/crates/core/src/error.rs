use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: expected {expected} values, found {found}")]
    RaggedLine {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: cannot parse {token:?} as a number")]
    BadToken { line: usize, token: String },

    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dataset has a single class")]
    SingleClass,

    #[error("dataset too small: {0}")]
    TooSmall(String),

    #[error("timestamp {t} outside [1, {length}]")]
    TimestampOutOfRange { t: usize, length: usize },

    #[error("prefix length {found} does not match expected length {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("need at least {need} series, got {got}")]
    NotEnoughPoints { need: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("prefix stream ended at step {step} before the final timestamp")]
    StreamEnded { step: usize },

    #[error("too few non-zero differences: {found} (need {need})")]
    TooFewPairs { found: usize, need: usize },

    #[error("misaligned results: {0}")]
    Misaligned(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

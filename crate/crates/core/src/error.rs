use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: duplicate timestamp {timestamp} at line {line}")]
    DuplicateTimestamp { path: PathBuf, line: usize, timestamp: String },

    #[error("{0}: no data rows")]
    EmptyFile(PathBuf),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("coordinate ({lat}, {lon}) outside grid bounds")]
    OutOfBounds { lat: f64, lon: f64 },

    #[error("series do not share any timestamp")]
    EmptyIntersection,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite loss for window {index} of the batch")]
    NonFiniteLoss { index: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("config error at `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { field: field.into(), msg: msg.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::NonFiniteLoss { .. } | Error::Divergence { .. } => 4,
            _ => 3,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("missing value in row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("observed dataset is empty")]
    EmptyDataset,

    #[error("dataset too small: {rows} rows, need at least {required}")]
    DatasetTooSmall { rows: usize, required: usize },

    #[error("no observed point attains the desired outcome")]
    NoFeasiblePoint,

    #[error("comparison set is empty")]
    EmptyComparisonSet,

    #[error("model failure: {0}")]
    Model(#[from] ModelError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Failures raised while obtaining predictions.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to launch `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("`{command}` exited with {status}: {stderr}")]
    ExitStatus {
        command: String,
        status: String,
        stderr: String,
    },

    #[error("malformed prediction on line {line}: `{text}`")]
    MalformedOutput { line: usize, text: String },

    #[error("expected {expected} predictions, got {got}")]
    CountMismatch { expected: usize, got: usize },

    #[error("invalid model definition: {0}")]
    Definition(String),

    #[error("prediction {0} is not finite")]
    NonFinite(f64),
}

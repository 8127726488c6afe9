use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: u64, message: String },

    #[error("cohort `{0}` resolved to no drugs present in the interaction data")]
    EmptyCohort(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("unknown drug `{0}`")]
    UnknownDrug(String),

    #[error("missing embeddings for {} drug(s): {}", .0.len(), .0.join(", "))]
    MissingEmbeddings(Vec<String>),

    #[error("invalid drug pair: `{0}` paired with itself")]
    InvalidPair(String),

    #[error("side effect {side_effect}: need {needed} negative pairs but only {available} candidates exist")]
    SamplingExhausted {
        side_effect: String,
        needed: usize,
        available: usize,
    },

    #[error("dataset too small: {actual} samples, at least {minimum} required")]
    TooSmall { actual: usize, minimum: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("backward cache does not match the model: {0}")]
    StaleCache(&'static str),

    #[error("{path}: bad binary container: {message}")]
    Container { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code: 2 for malformed input data, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingColumn { .. } | Error::Format { .. } | Error::Container { .. } => 2,
            _ => 1,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for {len} actions")]
    Index { index: usize, len: usize },

    #[error("unknown action id {0}")]
    Lookup(usize),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear system is singular or divergent: {0}")]
    Divergence(String),

    #[error("all action preferences are zero; escort policy is undefined")]
    DegeneratePreference,

    #[error("preference of sampled action {0} is zero; escort log-gradient is singular")]
    SingularGradient(usize),

    #[error("invalid config at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cell `{cell}` run {run}: {source}")]
    Run {
        cell: String,
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("leading gap for ticker {ticker} at {date}: no preceding price to carry forward")]
    LeadingGap { ticker: String, date: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("zero variance in return series of ticker {0}")]
    ZeroVariance(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("no eigenvalue above the noise band besides the market mode; supply an explicit sector range")]
    EmptySector,

    #[error("graph is disconnected")]
    Disconnected,

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Wraps this error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}

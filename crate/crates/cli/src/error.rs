use std::path::PathBuf;

use ibe_core::{GenerationError, MetricsError, ScorerError, StatsError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("missing upstream artifact {path} (run `{stage}` first)")]
    MissingUpstream { path: PathBuf, stage: &'static str },
    #[error("{0}")]
    Invalid(String),
    #[error("{context}: {source}")]
    Generation {
        context: String,
        #[source]
        source: GenerationError,
    },
    #[error("{context}: {source}")]
    Metrics {
        context: String,
        #[source]
        source: MetricsError,
    },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 usage, 2 data, 3 upstream service.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Generation { source, .. } if source.is_upstream() => 3,
            CliError::Metrics { source, .. } if source.is_upstream() => 3,
            CliError::Scorer(ScorerError::Transport(_) | ScorerError::Unavailable(_)) => 3,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn generation(context: impl Into<String>, source: GenerationError) -> Self {
        CliError::Generation {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

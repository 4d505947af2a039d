use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cenet_core::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

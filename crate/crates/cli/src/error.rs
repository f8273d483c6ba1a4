use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure at {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: tiltsense::Error,
    },
    #[error("statistical check failed: {0}")]
    Statistical(String),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Statistical(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    /// Wraps a core error raised while evaluating one grid point. Invalid
    /// parameters trace back to the configuration; everything else is a
    /// numerical failure.
    pub fn at(context: impl Into<String>, source: tiltsense::Error) -> Self {
        let context = context.into();
        match source {
            tiltsense::Error::InvalidParameter { .. } => CliError::Config(format!("{context}: {source}")),
            source => CliError::Numerical { context, source },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

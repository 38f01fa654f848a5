use std::path::PathBuf;

use thiserror::Error;

/// Exit statuses of the `srmt` binary.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const GATE_FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const NUMERIC: u8 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },

    #[error("cannot join tables on `{key}`: {message}")]
    Join { key: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] srmt_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Self::Invalid {
            field,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigParse { .. }
            | CliError::Invalid { .. }
            | CliError::Join { .. }
            | CliError::Usage(_)
            | CliError::Core(srmt_core::Error::Parse(_)) => exit::USAGE,
            CliError::Core(_) | CliError::Io { .. } => exit::NUMERIC,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

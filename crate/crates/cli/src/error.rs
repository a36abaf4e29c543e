use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Sim(#[from] zeno_core::Error),

    #[error("{failed} of {total} sweep points failed")]
    SweepPoints { failed: usize, total: usize },
}

impl CliError {
    pub fn parse(source_name: impl Into<String>, message: impl ToString) -> Self {
        CliError::Parse { source_name: source_name.into(), message: message.to_string() }
    }

    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation { field: field.into(), message: message.into() }
    }

    /// Process exit code: 2 for bad input, 3 for numerical or output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 2,
            CliError::Sim(e) if e.is_config() => 2,
            CliError::Sim(_) | CliError::Io { .. } | CliError::SweepPoints { .. } => 3,
        }
    }
}

/// Simulation config errors surface as field-level validation errors.
pub(crate) fn lift(err: zeno_core::Error) -> CliError {
    match err {
        zeno_core::Error::ConfigInvalid { field, message } => CliError::Validation { field, message },
        other => CliError::Sim(other),
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] stormlens::Error),

    #[error("{0}")]
    Usage(String),

    /// A file the caller named could not be read or written.
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn input(path: &Path, source: std::io::Error) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad inputs, 1 for internal or numeric failures.
    pub fn exit_code(&self) -> ExitCode {
        let user = match self {
            CliError::Core(e) => e.is_user_error(),
            CliError::Usage(_) | CliError::Input { .. } => true,
            CliError::Internal(_) => false,
        };
        ExitCode::from(if user { 2 } else { 1 })
    }
}

pub type CliResult<T> = Result<T, CliError>;

use std::path::PathBuf;

use thiserror::Error;

/// Failures of the file-level driver, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum SgError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] salgame_core::Error),
}

impl SgError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SgError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        SgError::Format { path: path.into(), reason: reason.to_string() }
    }

    /// 3 for numerical failures inside the detector, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            SgError::Core(salgame_core::Error::Numerical { .. } | salgame_core::Error::Configuration(_)) => 3,
            _ => 2,
        }
    }
}

pub type SgResult<T> = Result<T, SgError>;

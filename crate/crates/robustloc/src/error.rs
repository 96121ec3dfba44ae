use std::io;
use std::path::PathBuf;

/// Errors raised by the file formats, experiments and command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] robustloc_core::Error),
    #[error("{failed} of {attempted} solver runs failed, above the 5% budget")]
    FailureBudget { failed: usize, attempted: usize },
}

impl AppError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        AppError::Format { path: path.into(), message: message.to_string() }
    }

    /// Process exit code: 2 for usage and configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Usage(_) => 2,
            AppError::Core(robustloc_core::Error::UnsupportedTechnique(_)) => 2,
            _ => 1,
        }
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;

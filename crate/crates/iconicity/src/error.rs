use std::path::PathBuf;

/// Failures surfaced by the command-line tool, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(iconicity_core::Error),
    #[error("training diverged: {0}")]
    Divergence(iconicity_core::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Data { .. } | AppError::Invalid(_) | AppError::Io { .. } => 3,
            AppError::Divergence(_) => 4,
            AppError::CheckFailed(_) => 1,
        }
    }

    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<iconicity_core::Error> for AppError {
    fn from(e: iconicity_core::Error) -> Self {
        match e {
            iconicity_core::Error::Divergence { .. } => AppError::Divergence(e),
            iconicity_core::Error::InvalidConfig(msg) => AppError::Usage(msg),
            other => AppError::Invalid(other),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;

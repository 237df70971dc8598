use std::path::{Path, PathBuf};

/// Failures of the front ends, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Solver(retire_core::Error),
    #[error("{0}")]
    Config(String),
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error("service: {0}")]
    Service(String),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Solver(_) => 1,
            AppError::Config(_) | AppError::Data { .. } => 2,
            AppError::Service(_) => 3,
        }
    }

    pub fn data(path: &Path, message: impl std::fmt::Display) -> Self {
        AppError::Data { path: path.to_path_buf(), message: message.to_string() }
    }
}

impl From<retire_core::Error> for AppError {
    /// Solver trouble and infeasibility exit 1; bad numbers in inputs exit 2.
    fn from(e: retire_core::Error) -> Self {
        use retire_core::Error as E;
        match e {
            E::Infeasible { .. } | E::Solver(_) | E::NotOptimal | E::Singular(_) => AppError::Solver(e),
            other => AppError::Config(other.to_string()),
        }
    }
}

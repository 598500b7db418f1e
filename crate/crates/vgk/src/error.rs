use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(#[from] vgk_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) | AppError::Json(_) => 2,
            AppError::Solver(vgk_core::Error::InvalidParam(_))
            | AppError::Solver(vgk_core::Error::InvalidInit(_)) => 2,
            AppError::Solver(_) | AppError::Io { .. } => 3,
        }
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;

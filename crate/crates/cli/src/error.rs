use std::path::Path;

use she_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error at {path}: {message}")]
    Io { path: String, message: String },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// 2 for invalid input or violated hypotheses, 3 for I/O, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                CoreError::HypothesisViolation(_)
                | CoreError::Parse { .. }
                | CoreError::InvalidParameter(_)
                | CoreError::DimensionMismatch { .. } => 2,
                CoreError::Io { .. } => 3,
                _ => 1,
            },
        }
    }
}

//! Harness error type and process exit-code mapping.

use spikebench_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags, bad config file, invalid parameter combinations.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed data file (IDX, CSV, model manifest).
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    /// Process exit code: 2 config, 3 data/format, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Format { .. } => 3,
            HarnessError::Io(_) => 3,
            HarnessError::Core(e) => match e {
                CoreError::InvalidInput(_) | CoreError::InvalidConfig(_) => 2,
                CoreError::NumericFailure { .. } => 4,
                _ => 3,
            },
        }
    }
}

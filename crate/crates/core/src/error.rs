//! Error type shared across the simulator.

use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A caller-supplied value was outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value violates a scheme invariant.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A network layer kind has no spiking equivalent.
    #[error("unsupported layer {index}: {kind}")]
    UnsupportedLayer { index: usize, kind: String },

    /// Tensor shapes do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Non-finite membrane potential during simulation, usually mis-scaled weights.
    #[error("numeric failure in layer {layer}: {msg}")]
    NumericFailure { layer: usize, msg: String },

    /// Malformed model file.
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        CoreError::InvalidInput(msg.into())
    }

    pub fn invalid_config(msg: impl Into<String>) -> Self {
        CoreError::InvalidConfig(msg.into())
    }
}

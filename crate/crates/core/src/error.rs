use thiserror::Error;

/// Errors produced by the solver suite.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a precondition of the operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A combination of parameters is inadmissible for the scheme.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Non-finite values appeared in the state.
    #[error("solver diverged at step {step} (t = {t})")]
    Diverged { step: u64, t: f64 },

    /// A reference run would exceed the configured cost ceiling.
    #[error("reference run refused: estimated {estimated} inner steps exceeds ceiling {ceiling}")]
    CostCeiling { estimated: u64, ceiling: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

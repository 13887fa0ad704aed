use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum SimError {
    /// Bad user input: dimension mismatches, out-of-range hyperparameters,
    /// malformed config keys. Maps to CLI exit code 1.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation was called outside its contract (e.g. sync at a
    /// non-multiple of q). Programmer error, not user error.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A run blew up (non-finite or |coordinate| > 1e12). Maps to CLI exit
    /// code 2.
    #[error("run diverged at step {step}")]
    Diverged { step: u64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

pub fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SimError::InvalidArgument(msg.into()))
}

use alloc::boxed::Box;
use alloc::string::String;

use crate::optim::TrainTrace;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    /// Raised only when invariant verification is switched on.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    /// Objective or gradient norm became non-finite. Carries every record
    /// written before the failure.
    #[error("optimizer diverged after {:.3} passes", .trace.passes())]
    Diverged { trace: Box<TrainTrace> },
}

macro_rules! invalid_input {
    ($($arg:tt)*) => { $crate::error::Error::InvalidInput(alloc::format!($($arg)*)) };
}

macro_rules! invalid_param {
    ($($arg:tt)*) => { $crate::error::Error::InvalidParameter(alloc::format!($($arg)*)) };
}

pub(crate) use invalid_input;
pub(crate) use invalid_param;

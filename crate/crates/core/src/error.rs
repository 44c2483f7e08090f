use thiserror::Error;

use crate::equations::GeneratorKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The adaptive step size collapsed below what the arithmetic can resolve.
    #[error("{kind} equation: step size underflow (h = {step:e}) at t = {time}")]
    StiffnessFailure {
        kind: GeneratorKind,
        time: f64,
        step: f64,
    },

    #[error("{kind} equation: trace {trace} left the allowed band at t = {time}")]
    Leakage {
        kind: GeneratorKind,
        time: f64,
        trace: f64,
    },

    #[error("excited-state trace {trace_ee:e} too small for a validity ratio")]
    UndefinedRatio { trace_ee: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

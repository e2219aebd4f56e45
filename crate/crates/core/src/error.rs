use thiserror::Error;

use crate::autodiff::Op;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph cycle detected at node {node}")]
    Cycle { node: usize },

    #[error("non-finite gradient encountered at {op:?} node")]
    NonFiniteGradient { op: Op },

    #[error("operation {op:?} has no tangent rule (arity {arity})")]
    UnsupportedDualOp { op: Op, arity: usize },

    #[error("non-finite activation in network forward pass")]
    NonFiniteForward,

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rate {lambda} outside grid range (0, {limit}]")]
    OutOfRange { lambda: f64, limit: f64 },

    #[error("model form mismatch: expected {expected}")]
    FormMismatch { expected: &'static str },

    #[error("non-finite residual at t = {t}")]
    NonFiniteResidual { t: f64 },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("implicit integrator failed at t = {t}: {reason}")]
    StiffFailure { t: f64, reason: String },

    #[error("non-finite right-hand side at t = {t}")]
    NonFiniteRhs { t: f64 },

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("duplicate parameter slice `{0}`")]
    DuplicateSlice(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteGradient { .. }
                | Error::NonFiniteForward
                | Error::NonFiniteResidual { .. }
                | Error::StiffFailure { .. }
                | Error::NonFiniteRhs { .. }
        )
    }
}

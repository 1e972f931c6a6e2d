use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coefficient a = {0} is outside (-1, 0)")]
    CoefficientOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step {0} is not 1/n for an integer n >= 1")]
    InvalidStep(f64),

    #[error("time {time} is not aligned with the grid of step 1/{steps_per_unit}")]
    NotGridAligned { time: f64, steps_per_unit: u32 },

    #[error(
        "window exhausted: need [{need_left}, {need_right}], have [{have_left}, {have_right}]"
    )]
    WindowExhausted {
        need_left: f64,
        need_right: f64,
        have_left: f64,
        have_right: f64,
    },

    #[error("grid mismatch: 1/{0} vs 1/{1}")]
    GridMismatch(u32, u32),

    #[error(
        "truncation tolerance {tol:e} unreachable in the available window (best bound {best:e})"
    )]
    TolUnreachable { tol: f64, best: f64 },

    #[error("fundamental solution has no decay envelope")]
    EnvelopeUnavailable,

    #[error("decay fit failed: {0}")]
    DecayFit(String),

    #[error("budget infeasible: {points} grid points exceed the cap of {cap}")]
    InfeasibleBudget { points: u64, cap: u64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

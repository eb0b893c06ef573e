use alloc::string::String;

/// Errors raised by the numerical engines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(
        "correlation matrix is singular after nugget escalation; closest design points are \
         #{first} and #{second} (distance {distance:e})"
    )]
    SingularCorrelation {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("trend is not identifiable: {points} points for {basis_size} basis functions")]
    Identifiability { points: usize, basis_size: usize },

    #[error("prediction variance {0:e} is negative beyond round-off")]
    NegativeVariance(f64),

    #[error("subset simulation hit the probability floor after {levels} levels (pf < {partial_pf:e})")]
    PfFloor { levels: usize, partial_pf: f64 },

    #[error("limit state is not finite at sample {index} of level {level}")]
    NonFinite { level: usize, index: usize },

    #[error("refinement density is zero everywhere in the confidence box")]
    EmptyMargin,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

use alloc::boxed::Box;
use alloc::string::String;

use crate::compress::MultiCompressionReport;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("axis sets overlap")]
    OverlappingAxes,

    #[error("axis {0} out of range")]
    UnknownAxis(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("substate undefined: relative entropy is infinite")]
    SubstateUndefined,

    #[error("infinite relative entropy between {0}")]
    InfiniteDivergence(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("domination violated at symbol {symbol}: 2^-a * P = {scaled} > Q = {q}")]
    DominationViolated { symbol: String, scaled: f64, q: f64 },

    #[error("malformed protocol: {0}")]
    MalformedProtocol(String),

    #[error("range mismatch: {0}")]
    RangeMismatch(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error("no protocol reaches the target error")]
    Infeasible,

    #[error(
        "sample search exhausted after {attempts} attempts (smallest worst deviation {best_deviation})"
    )]
    RetryBudgetExhausted { attempts: usize, best_deviation: f64 },

    #[error("coin budget exhausted: best error {best_error} exceeds target {target}")]
    CoinBudgetExhausted {
        best_error: f64,
        target: f64,
        report: Box<MultiCompressionReport>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive semidefinite (eigenvalue {0})")]
    NotPositiveSemidefinite(f64),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("net is empty")]
    EmptyNet,

    #[error("invariant violated: {0}")]
    InvariantViolated(String),
}

pub type Result<T> = core::result::Result<T, Error>;

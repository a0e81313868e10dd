//! Error type shared by all engine modules.

use thiserror::Error;

/// Errors raised by engine operations on precondition or invariant failure.
///
/// Validation of raw input clusters does not go through this type: it is
/// reported structurally by [`crate::cluster::ValidationReport`]. `EngineError`
/// covers operations called on data that already passed validation.
#[derive(Debug, Clone, Error)]
pub enum EngineError {
    /// A log-discrepancy coefficient outside the half-open interval (0, 1].
    #[error(
        "coefficient {0} is outside (0, 1]: the monotone saturation argument needs 0 < c <= 1"
    )]
    CoefficientOutOfRange(String),

    /// An operation precondition failed (wrong surface, ineligible center, ...).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Divisor-class dimensions do not match the surface rank.
    #[error("dimension mismatch: class has {class} coefficients, surface rank is {rank}")]
    DimensionMismatch { class: usize, rank: usize },

    /// A basis label was reused in a blow-up.
    #[error("duplicate basis label {0:?}")]
    DuplicateLabel(String),

    /// A class failed the numerical (-1)-curve conditions required to contract.
    #[error("class is not contractible: {0}")]
    NotContractible(String),

    /// An input pair failed structural validation.
    #[error("invalid input pair: {0}")]
    InvalidPair(String),

    /// A rationality precondition failed (the Coolidge criteria need genus 0).
    #[error("pair is not rational: combinatorial genus is {0}, expected 0")]
    NotRational(String),

    /// Mid-run invariant violation; signals an inconsistent input cluster.
    #[error("invariant violation after {steps} move(s): {message}")]
    InvariantViolation { steps: usize, message: String },

    /// Wrong number of multiplicities handed to a fixed-arity formula.
    #[error("arity mismatch: expected {expected} multiplicities, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    /// An internal soundness assertion failed. Never expected on valid input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;

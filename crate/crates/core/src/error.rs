use thiserror::Error;

use crate::diffop::MultiIndex;

/// Errors raised while building operators or evaluating identities.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("series did not reach the requested precision after {terms} terms")]
    PrecisionUnreachable { terms: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// A denominator came within the pole guard of zero. Samplers treat this
    /// as a signal to draw a fresh point.
    #[error("denominator {magnitude:.3e} is inside the pole guard")]
    PoleProximity { magnitude: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operators act with different shift units")]
    ShiftMismatch,

    #[error("no admissible sample after {tries} tries")]
    SamplingExhausted { tries: usize },

    #[error("exactness violated: {0}")]
    ExactnessViolation(String),

    #[error("degenerate spectrum at {partition:?}: the triangular system is singular")]
    DegenerateSpectrum { partition: Vec<u32> },

    #[error("division by zero in exact arithmetic")]
    DivisionByZero,

    #[error("infinite product diverges (|q| = {modulus} is not below 1)")]
    Divergence { modulus: f64 },

    #[error("multi-index {0:?} is not in the operator support")]
    UnknownIndex(MultiIndex),
}

pub type Result<T> = std::result::Result<T, Error>;

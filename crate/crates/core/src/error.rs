//! Error type shared by all modules.

/// Errors reported by model construction and estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A vector or matrix dimension does not match its peers.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two locations coincide exactly; covariances would be singular by
    /// construction rather than by conditioning.
    #[error("locations {i} and {j} are identical")]
    DuplicateLocations { i: usize, j: usize },

    /// A parameter violates its domain (non-positive scale, empty input, ...).
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    /// An index is outside the addressed structure.
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// Integration limits are inverted at a coordinate.
    #[error("lower limit is not below upper limit at coordinate {index}")]
    LimitsInverted { index: usize },

    /// Monte Carlo configuration is unusable (R < 2, or odd R with
    /// antithetic pairing).
    #[error("invalid sample count {r}: {reason}")]
    BadSampleCount { r: usize, reason: &'static str },

    /// Cholesky factorization failed even after the jitter escalation.
    #[error("matrix is not positive definite (last jitter tried: {jitter_tried:e})")]
    NotPositiveDefinite { jitter_tried: f64 },

    /// Every Monte Carlo sample of a denominator underflowed to zero.
    #[error("denominator estimate vanished; the probability being conditioned on underflows")]
    VanishingDenominator,

    /// A non-finite value surfaced where a finite one is required.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// The exact rejection sampler exceeded its attempt budget.
    #[error("rejection sampler exhausted {attempts} attempts; constraint mass too small")]
    RejectionBudgetExhausted { attempts: u64 },

    /// The exact rejection oracle only scales to small n.
    #[error("exact truncated-normal oracle supports n <= {max}, got {n}")]
    ExactOracleTooLarge { n: usize, max: usize },
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to invalid
    /// inputs). The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::VanishingDenominator
                | Error::NonFinite { .. }
                | Error::RejectionBudgetExhausted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the matching library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite feature value at coordinate {0}")]
    NonFinite(usize),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel has unbounded diagonal; supply a sample to estimate kappa")]
    UnboundedKernel,

    #[error("anchor mismatch between score function and Gram matrix")]
    AnchorMismatch,

    #[error("need at least 2 positive pairs to recombine negatives, got {0}")]
    CannotRecombine(usize),

    #[error("degenerate positive ratio: m = {m}, alpha = {alpha} gives m+ = {positives}, m- = {negatives}")]
    DegenerateRatio {
        m: usize,
        alpha: f64,
        positives: usize,
        negatives: usize,
    },

    #[error("non-finite gradient at step {step}: {detail}")]
    NonFiniteGradient { step: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

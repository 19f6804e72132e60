use thiserror::Error;

/// Errors raised by kernels, signal-model constructors and detectors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller broke a documented precondition (shape, sign, length).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A recursion pivot collapsed below the singularity tolerance.
    #[error("singular pivot {pivot:e} at recursion {step}")]
    Singular { step: usize, pivot: f64 },

    /// The Gauss-Jordan oracle met a pivot below its threshold.
    #[error("singular matrix: pivot {pivot:e} in column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    /// A scalar pivot that must be real carried a non-negligible imaginary part.
    #[error("pivot {re:e}{im:+e}i at recursion {step} is not real")]
    NonRealPivot { step: usize, re: f64, im: f64 },

    /// NaN or infinity reached a public kernel.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}

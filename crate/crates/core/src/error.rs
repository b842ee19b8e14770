use thiserror::Error;

/// Errors shared across the workbench.
#[derive(Error, Debug)]
pub enum OpalgError {
    /// Input violates a shape or well-formedness precondition.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A matrix expected to be Hermitian is not, beyond tolerance.
    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    NonHermitian { deviation: f64, tolerance: f64 },

    /// Cholesky or a positivity-requiring routine received a matrix that is
    /// not strictly positive.
    #[error("matrix is not strictly positive (lambda_min = {lambda_min:.3e})")]
    NotStrictlyPositive { lambda_min: f64 },

    /// A structural construction (Wedderburn data, matrix units, block form)
    /// failed verification after retries.
    #[error("structure recovery failed: {0}")]
    StructureFailure(String),

    /// No constructive factorization is available for this algebra.
    #[error("unsupported algebra: {0}")]
    UnsupportedAlgebra(String),

    /// A decomposition requiring a surjective map got one that is not onto.
    #[error("map is not onto its declared range: {0}")]
    RangeNotOnto(String),

    /// An envelope or ideal search could not certify or refute every subset
    /// it needed; the message summarizes the partial certificate log.
    #[error("envelope search inconclusive: {0}")]
    EnvelopeInconclusive(String),
}

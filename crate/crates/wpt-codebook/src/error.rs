//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter lies outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vector/matrix dimensions do not agree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A numerical contract was violated (e.g. a non-Hermitian matrix was
    /// passed where a Hermitian one is required, or an eigenpair failed its
    /// residual bound).
    #[error("numeric contract violation: {0}")]
    ContractViolation(String),

    /// Codebook initialization ran out of training elements before finding
    /// enough sufficiently-distinct codewords. Carries how many were found
    /// so the caller can retry with a smaller gap threshold.
    #[error("insufficient training diversity: found {found} of {requested} codewords")]
    InsufficientDiversity { found: usize, requested: usize },

    /// A tree cell has no training element distinct enough from its parent
    /// codeword; the caller decides how to degrade (usually by duplicating
    /// the parent codeword down the subtree).
    #[error("degenerate cell: no candidate clears the distortion gap")]
    DegenerateCell,

    /// An experiment configuration is inconsistent (bad counts, frame too
    /// short, dimension mismatch between artifact and config, ...).
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by lattice, algebra, state, and Fock-space operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects live on different spacetime grids (or carry different
    /// truncation caps) and cannot be combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A graded component beyond the configured truncation cap would become
    /// nonzero. Truncation is a hard error, never silent.
    #[error("truncation overflow: degree {degree} exceeds cap {cap}")]
    TruncationOverflow { degree: usize, cap: usize },

    /// A point or transformed support region leaves the grid domain.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// An evaluation point landed on (or within machine distance of) a pole.
    #[error("pole hit: {0}")]
    PoleHit(String),

    /// The requested computation exceeds the configured size guards.
    #[error("too large: {0}")]
    TooLarge(String),

    /// A support precondition (wedge localization, shell localization) fails.
    #[error("support violation: {0}")]
    SupportViolation(String),

    /// Scattering inputs are not ordered by velocity as required.
    #[error("velocity order violation: {0}")]
    VelocityOrderViolation(String),

    /// The operation is not available in the requested regime
    /// (e.g. Fock-space numerics in dimension > 2).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Invalid parameters at construction or configuration time.
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    /// I/O failure while reading or writing containers and reports.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON in a config or sidecar file.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported simplex dimension {0} (at most 2)")]
    UnsupportedDimension(usize),

    #[error("malformed boundary: {0}")]
    Structural(String),

    #[error("invalid homology degree {degree} (complex has max dimension {max_dim})")]
    InvalidDegree { degree: usize, max_dim: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("Sinkhorn did not converge after {iterations} iterations (marginal violation {violation:e})")]
    Convergence { iterations: usize, violation: f64 },

    #[error("exact transport problem too large: {n}x{m} exceeds the {limit} cell guard")]
    TooLarge { n: usize, m: usize, limit: usize },

    #[error("degenerate transport plan: row {0} has zero mass")]
    DegeneratePlan(usize),

    #[error("stale provenance: simplex {index} out of bounds for complex of size {len}")]
    Provenance { index: usize, len: usize },

    #[error("JKO objective diverged (non-finite value); try a smaller jko_lr")]
    Divergence,

    #[error("empty persistence diagram in degree {degree} at step {step} with a nonempty target")]
    EmptyDiagram { degree: usize, step: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), message: err.to_string() }
    }
}

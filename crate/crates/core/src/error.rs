use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin quantum number {0}: must be a positive multiple of 1/2")]
    InvalidSpin(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("site index {site} out of range for a chain of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Hilbert space dimension {dim} exceeds the configured budget of {budget}")]
    Capacity { dim: usize, budget: usize },

    #[error("eigensolver did not converge after {restarts} restarts (worst residual {worst_residual:.3e})")]
    NoConvergence { restarts: usize, worst_residual: f64, residuals: Vec<f64> },

    #[error("state norm drifted to {norm:.6e} during Chebyshev propagation; re-estimate the spectral bounds")]
    SpectralBounds { norm: f64 },

    #[error("state is not normalized (norm {0:.12})")]
    NotNormalized(f64),
}

use thiserror::Error;

/// Errors raised by the linear-algebra kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },
    #[error("matrix is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("numeric failure: {0}")]
    Failure(String),
}

/// Crate-level error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("no positive power allocation exists (spectral radius {spectral_radius:.6})")]
    InfeasibleAllocation { spectral_radius: f64 },
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("geometric program ended with status {0}")]
    Gp(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or out-of-range configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// The requested system exceeds an enumeration or memory cap.
    #[error("size limit exceeded: {0}")]
    Size(String),
    /// Eigenstate or sector labels are missing or inconsistent.
    #[error("labeling error: {0}")]
    Labeling(String),
    /// Input failed a structural check (unitarity, hermiticity, shape).
    #[error("validation error: {0}")]
    Validation(String),
    /// A numerical invariant was violated during a computation.
    #[error("numerical integrity error: {0}")]
    Numerical(String),
    /// An eigenphase sits on the branch cut of the principal logarithm.
    #[error("principal logarithm is ambiguous: eigenphase {phase} lies within {tol:e} of the branch cut")]
    BranchAmbiguity { phase: f64, tol: f64 },
    /// A Hermitian tangent hit a pole.
    #[error("tangent pole: scaled eigenvalue {0} is too close to pi/2 + k*pi")]
    Pole(f64),
    /// The perturbative target is degenerate and needs the block solver.
    #[error("target level {index} lies in a degenerate cluster {cluster:?}; use the degenerate block solver")]
    DegenerateTarget { index: usize, cluster: Vec<usize> },
    /// A fixed-point iteration ran out of iterations.
    #[error("fixed-point iteration did not converge after {iterations} iterations (last estimate {last})")]
    NonConvergence { iterations: usize, last: f64 },
    /// Too few data points for a statistic or fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Dense linear algebra failed.
    #[error("linear algebra failure: {0}")]
    LinAlg(String),
    /// Filesystem failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// (De)serialization failure.
    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Size(_) | Error::Serde(_) => 2,
            Error::Numerical(_)
            | Error::NonConvergence { .. }
            | Error::LinAlg(_)
            | Error::BranchAmbiguity { .. }
            | Error::Pole(_)
            | Error::Validation(_) => 3,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

/// Library result alias.
pub type Result<T> = std::result::Result<T, Error>;

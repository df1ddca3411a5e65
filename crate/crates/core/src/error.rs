use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed instance: {0}")]
    MalformedInstance(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("r = {given} is below the minimum admissible value {minimum}")]
    RadiusTooSmall { given: f64, minimum: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("no connected graph after {attempts} attempts; try a higher average degree")]
    ConnectivityAttempts { attempts: usize },

    #[error("consensus matrix violates its conditions: {0}")]
    ConsensusConditions(String),

    #[error("spectral bound nu = {0} is not below 1")]
    SpectralGap(f64),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

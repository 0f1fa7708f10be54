use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystem(String),

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("eigendecomposition did not converge")]
    EigenConvergence,

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("integration failure at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("evolution is not cyclic: {0}")]
    NotCyclic(String),

    #[error("no reservoir parameters reproduce the state (best residual {0:.3e})")]
    NoSolution(f64),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

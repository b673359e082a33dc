use thiserror::Error;

#[derive(Debug, Error)]
pub enum GlError {
    #[error("solver did not converge: {context} (last residual {residual:e})")]
    NonConvergence { context: String, residual: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("symmetry violated: {0}")]
    Symmetry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GlError>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid split law: {0}")]
    InvalidSpec(String),

    #[error("{0}: joint split laws have no marginal; use sample_vector")]
    JointHasNoMarginal(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

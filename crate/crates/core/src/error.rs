use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("linear algebra error: {message} (residual {residual:.3e})")]
    LinearAlgebra { message: String, residual: f64 },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("dependency error: {0}")]
    Dependency(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("spectral error: {message}")]
    Spectral { message: String, log: Vec<f64> },
    #[error("divergence: {message}")]
    Divergence { message: String, history: Vec<f64> },
    #[error("parse error at {line}:{col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a structural invariant (ordering, range, dimension match).
    #[error("validation error: {0}")]
    Validation(String),

    /// A text input could not be parsed; carries the 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameter and matrix shapes disagree.
    #[error("shape error: {0}")]
    Shape(String),

    /// A serialized artifact has the wrong format or version.
    #[error("format error: {0}")]
    Format(String),

    /// An unknown name or inconsistent configuration was supplied.
    #[error("config error: {0}")]
    Config(String),

    /// The optimizer hit a non-finite value or gradient; carries the offending iterate.
    #[error("numerical error: {message}")]
    Numerical { message: String, iterate: Vec<f64> },

    /// The thinning sampler detected an invalid dominating rate.
    #[error("simulation error: {0}")]
    Simulation(String),

    /// Every cell of a hyperparameter search failed.
    #[error("search error: {0}")]
    Search(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

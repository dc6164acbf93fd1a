use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evaluation point {point:?} lies within {distance:e} of a source point")]
    SingularEvaluation { point: [f64; 2], distance: f64 },

    #[error("tolerance {target:e} not reached: achieved error estimate {achieved:e} ({context})")]
    Convergence {
        context: String,
        achieved: f64,
        target: f64,
    },

    #[error("linear solve failed: {reason} (condition estimate {condition:e})")]
    Solver { reason: String, condition: f64 },

    #[error("invariant violated: {0}")]
    Inconsistency(String),

    #[error("degenerate Dirac cone: {0}")]
    DegenerateCone(String),

    #[error("cone fit outside its validity window: {0}")]
    ConeWindow(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

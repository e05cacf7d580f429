use thiserror::Error;

/// Rejection of a scenario description or of a derived parameter.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct ConfigError {
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

/// Malformed input text (scenario files, sweep specs, matrix dumps).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),

    #[error("parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("state space of {states} states exceeds the cap of {cap}")]
    Capacity { states: usize, cap: usize },

    #[error("power iteration did not converge within {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("transition matrix is singular: {0}")]
    Singular(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("not supported by this engine: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

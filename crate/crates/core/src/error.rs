use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the solvers and their input validation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("entropic index must be a finite value > 0, got {0}")]
    InvalidEntropicIndex(f64),

    #[error("{function} is undefined at {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mdp: {0}")]
    InvalidMdp(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidEntropicIndex(_)
                | Error::Domain { .. }
                | Error::InvalidDistribution(_)
                | Error::InvalidParameter(_)
                | Error::InvalidMdp(_)
                | Error::Shape(_)
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}

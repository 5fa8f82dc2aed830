use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{function} has a pole at {arg}")]
    Pole { function: &'static str, arg: f64 },

    #[error("points {i} and {j} coincide")]
    Collision { i: usize, j: usize },

    #[error("{what} did not converge (achieved error estimate {estimate:e})")]
    NonConvergence { what: &'static str, estimate: f64 },

    #[error("least-squares design matrix is rank deficient")]
    RankDeficient,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by rejected input, as opposed to a numerical
    /// failure during evaluation.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Unsupported(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

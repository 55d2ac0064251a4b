use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value while evaluating {0}")]
    NonFinite(&'static str),

    #[error("{what} did not converge: partial value {partial:e}, achieved tolerance {achieved:e}")]
    NotConverged {
        what: String,
        partial: f64,
        achieved: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

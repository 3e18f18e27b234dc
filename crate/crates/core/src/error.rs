use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("series too short: need at least {needed} observations, got {got}")]
    Length { needed: usize, got: usize },

    #[error("model not stationary: AR polynomial has a root on or inside the unit circle")]
    NotStationary,

    #[error("model not invertible: MA polynomial has a root on or inside the unit circle")]
    NotInvertible,

    #[error("rank deficient design: {0}")]
    Rank(String),

    #[error("degenerate moments: {0}")]
    Degenerate(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("invalid configuration at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

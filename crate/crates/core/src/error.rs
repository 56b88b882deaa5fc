use thiserror::Error;

/// Errors raised across the crate. Variants mirror the failure classes of
/// each subsystem so callers can match on them instead of parsing strings.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size error: 2^{n} states exceed the cap of 2^{cap}")]
    Size { n: usize, cap: usize },

    #[error("infeasible schedule at n={n}: A_n C_n = {product} >= 1")]
    Infeasible { n: usize, product: f64 },

    #[error("negative rate: {0}")]
    NegativeRate(String),

    #[error("singular parameters: {0}")]
    Singular(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("inadmissible query: {0}")]
    Inadmissible(String),

    #[error("branch mismatch: {0}")]
    BranchMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {err:e})")]
    Quadrature { tol: f64, err: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("decomposition levels start at 1")]
    ZeroLevel,

    #[error("point {0:?} is not strictly inside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("circulant embedding is not nonnegative definite: clipped spectral mass fraction {0:e}")]
    Embedding(f64),

    #[error("{sites} lattice sites exceed the limit of {limit} for this backend")]
    TooManySites { sites: usize, limit: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("lattice mismatch between combined objects")]
    LatticeMismatch,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("alpha = {0} is outside (0, 1)")]
    AlphaRange(f64),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

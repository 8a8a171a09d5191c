use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("eigendecomposition of a {dim}x{dim} matrix did not converge")]
    NoConvergence { dim: usize },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below threshold {threshold:e}")]
    NotPsd { eigenvalue: f64, threshold: f64 },

    #[error("block E_{index}: {source}")]
    Block {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension {dim} exceeds cap {cap}{hint}")]
    CapExceeded {
        dim: u64,
        cap: u64,
        hint: &'static str,
    },

    #[error("symbol index {index} out of range for order {m}")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("truncation did not reach trace 1-{eps:e} within {max_dim} levels")]
    Truncation { eps: f64, max_dim: usize },

    #[error("sdpa format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric: entries ({i},{j}) and ({j},{i}) differ by {gap:e}")]
    Asymmetric { i: usize, j: usize, gap: f64 },

    #[error(
        "eigenvalue iteration did not converge after {iters} sweeps \
         (best estimate [{lambda_min:e}, {lambda_max:e}])"
    )]
    NoConvergence {
        iters: usize,
        lambda_min: f64,
        lambda_max: f64,
    },

    #[error("update direction is zero")]
    ZeroDirection,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated at step {step}: {what}")]
    InvariantBreach { step: usize, what: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

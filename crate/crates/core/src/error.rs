use thiserror::Error;

/// Errors raised by the numerical kernels and the power-method driver.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid model parameter: {0}")]
    InvalidParam(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The dominant eigenvalue is not simple (or is a complex pair).
    #[error("dominant eigenvalue is not simple: |{eta:.6e}| shared with {other:.6e}")]
    DegenerateDominance { eta: f64, other: f64 },

    #[error("ill-conditioned {what}: {detail}")]
    IllConditioned { what: &'static str, detail: String },

    #[error("problem too large for dense reference: {0}")]
    TooLarge(String),

    #[error("iteration {iter}: {source}")]
    AtIteration {
        iter: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Strips any iteration context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } => source.root(),
            e => e,
        }
    }
}

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported element: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("singular matrix ({0})")]
    Singular(String),

    #[error("constraints are inconsistent: residual {residual:.3e} exceeds {tolerance:.3e}")]
    Infeasible { residual: f64, tolerance: f64 },

    #[error("initial data violates the charge compatibility condition: residual {residual:.3e}")]
    Compatibility { residual: f64 },

    #[error("quadratic objective is unbounded below on the feasible set")]
    Unbounded,

    #[error("problem too large for dense decomposition: {size} columns (limit {limit})")]
    SizeLimit { size: usize, limit: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("configuration error for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidMesh(_) => "mesh",
            Error::Unsupported(_) => "unsupported",
            Error::DimensionMismatch(_) => "dimension",
            Error::NotPositiveDefinite(_) | Error::Singular(_) => "factorization",
            Error::Infeasible { .. } => "infeasible",
            Error::Compatibility { .. } => "compatibility",
            Error::Unbounded => "unbounded",
            Error::SizeLimit { .. } => "size-limit",
            Error::NoConvergence { .. } => "no-convergence",
            Error::NonFinite(_) => "non-finite",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

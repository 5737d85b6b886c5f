use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {k} outside schedule horizon 1..={horizon}")]
    OutOfHorizon { k: u64, horizon: u64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("inner solver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("iterate diverged at iteration {iteration} (norm {norm:e})")]
    Diverged { iteration: u64, norm: f64 },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate start: initial gradient norm is zero")]
    DegenerateStart,
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True when the failure is numerical rather than a usage or input problem.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Convergence { .. } | Error::Diverged { .. } | Error::NonFinite(_) => true,
            Error::AtIteration { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

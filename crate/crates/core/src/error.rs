use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge after {doublings} doublings (n = {quad_n}): last {last}, previous {previous}")]
    NonConvergence {
        doublings: u32,
        quad_n: usize,
        last: f64,
        previous: f64,
    },

    #[error("state space of {states:.3e} configurations exceeds the enumeration budget of {budget:.3e}")]
    BudgetExceeded { states: f64, budget: f64 },

    /// A cover handed to the subadditivity check misses some block configuration.
    #[error("cover does not contain the event: block configuration {witness:?} (clock digits, row-major) is uncovered")]
    CoverViolation { witness: Vec<u8> },

    #[error("circular mean undefined: zero resultant length")]
    DegenerateMean,

    #[error("{context}: {path}: {source}")]
    Io {
        context: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(context: &'static str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context,
            path: path.into(),
            source,
        }
    }

    /// Numerical failures (as opposed to bad inputs or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

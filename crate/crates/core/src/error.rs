use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("direction {mu} out of range for an order-{order} tensor (directions are 1-based)")]
    InvalidDirection { mu: usize, order: usize },

    #[error("shape mismatch{}: {message}", direction.map(|d| format!(" in direction {d}")).unwrap_or_default())]
    Shape {
        direction: Option<usize>,
        message: String,
    },

    #[error("matrix is numerically singular (zero pivot in column {column})")]
    Singular { column: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dense oracle of size {size} exceeds the limit {limit}")]
    OracleSize { size: usize, limit: usize },

    #[error("no convergence after {substeps} substeps (best error estimate {estimate:.3e})")]
    NoConvergence { estimate: f64, substeps: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("reference has zero norm")]
    InvalidReference,
}

impl Error {
    pub(crate) fn shape(message: impl Into<String>) -> Self {
        Error::Shape {
            direction: None,
            message: message.into(),
        }
    }

    pub(crate) fn shape_at(direction: usize, message: impl Into<String>) -> Self {
        Error::Shape {
            direction: Some(direction),
            message: message.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::NoConvergence { .. })
    }
}

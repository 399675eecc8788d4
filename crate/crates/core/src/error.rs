use thiserror::Error;

/// Errors surfaced by model evaluation, solving, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation (wrong sign, empty range, ...).
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An operation was called with arguments outside its domain.
    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// A computation produced NaN or an infinity where a finite value is required.
    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    /// Grid construction or lookup failed.
    #[error("grid error: {0}")]
    Grid(String),

    /// Backward induction failed at a specific period.
    #[error("solver error at period {period}: {reason}")]
    Solver { period: usize, reason: String },

    /// Monte Carlo simulation was configured or driven inconsistently.
    #[error("simulation error: {0}")]
    Simulation(String),

    /// Export was asked to write inconsistent or undefined data.
    #[error("output error: {0}")]
    Output(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            op,
            reason: reason.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

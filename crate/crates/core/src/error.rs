use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside the domain of the operation.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Input containers disagree in shape.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The design matrix does not have full column rank.
    #[error("design matrix is rank deficient (column {column} is linearly dependent on earlier columns)")]
    RankDeficient { column: usize },

    /// No finite answer exists for the requested configuration.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A privatized estimate could not be formed from the noisy release.
    #[error("estimate undefined: {0}")]
    EstimateUndefined(String),

    /// An iterative solver failed to bracket or converge.
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Fails unless `value` is finite and strictly positive.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

/// Fails unless `value` lies in the open unit interval.
pub(crate) fn ensure_unit_open(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in (0, 1), got {value}")))
    }
}

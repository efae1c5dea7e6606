use thiserror::Error;

/// Errors raised by the planning pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A time or interval falls outside the discretized horizon.
    #[error("range error: {0}")]
    Range(String),

    /// A distribution collapsed to zero width where a proper density was required.
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    /// A decision variable lies outside its feasible interval.
    #[error("constraint violation: {0}")]
    Constraint(String),

    /// Propagated mass would leave the end of the time grid.
    #[error("horizon too short: {0}")]
    Horizon(String),

    /// Structural inconsistency in the airspace model.
    #[error("model error: {0}")]
    Model(String),

    /// Malformed configuration or document.
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

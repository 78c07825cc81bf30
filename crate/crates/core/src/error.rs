use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested evaluation,
    /// e.g. a gain kernel queried at `t >= T`.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violates a stated precondition. The message names the
    /// offending quantity and the constraint it breaks.
    #[error("validation error: {0}")]
    Validation(String),

    /// The requested operation is not defined for this input kind
    /// (e.g. algebraic connectivity of a directed graph).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numeric evaluation produced a non-finite value or an iteration
    /// failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A theorem hypothesis checked at runtime does not hold for the
    /// supplied data (e.g. a gain matrix fails its definiteness test).
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    /// A closed-form settling bound is undefined for these parameters.
    #[error("bound undefined: {0}")]
    BoundUndefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;

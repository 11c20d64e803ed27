use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the map being evaluated.
    #[error("domain error: {0}")]
    Domain(String),
    /// Mismatched vector or matrix dimensions.
    #[error("shape error: {0}")]
    Shape(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The operation needs derivative or inverse data the spec does not carry.
    #[error("capability error: {0}")]
    Capability(String),
    /// A caller-side precondition does not hold.
    #[error("contract error: {0}")]
    Contract(String),
    /// A mean, weight vector or problem failed its construction invariants.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative method failed to converge or a bracket was lost.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A desk-scale resource cap would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    /// Malformed input file or serialized payload.
    #[error("format error: {0}")]
    Format(String),
    /// Two independent routes to the same quantity disagreed.
    #[error("internal consistency failure: {0}")]
    Internal(String),
    /// A rejection sampler ran out of retries.
    #[error("sampling error: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;

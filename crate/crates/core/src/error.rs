use thiserror::Error;

/// Errors produced by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition does not hold (e.g. `alpha >= alpha_c`).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A numerical routine failed to converge or to bracket a root.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The request exceeds a validated capability limit (e.g. `n > 30`).
    #[error("capability exceeded: {0}")]
    Capability(String),

    /// Configuration could not be parsed or is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A file could not be decoded or violates a stored invariant.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

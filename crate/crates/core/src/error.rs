use thiserror::Error;

/// Errors produced by the analysis engine.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested posterior is not a proper probability distribution.
    #[error("propriety error: {0}")]
    Propriety(String),

    /// The operation is not available for this object (e.g. the CDF of an
    /// improper prior).
    #[error("capability error: {0}")]
    Capability(String),

    /// A numerical routine could not reach its accuracy target within budget.
    /// `best` carries the best estimate obtained so far.
    #[error("accuracy error: {message} (best estimate: {best})")]
    Accuracy { message: String, best: f64 },

    /// A table lookup failed.
    #[error("lookup error: {0}")]
    Lookup(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn propriety(msg: impl Into<String>) -> Self {
        Error::Propriety(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state was evaluated outside the distribution's domain.
    #[error("state {x} lies outside the domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    /// A constructed value would violate a structural invariant.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// An operation was called with inputs outside its contract.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A bounded search was asked to exceed its configured size.
    #[error("resource limit: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

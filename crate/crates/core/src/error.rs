use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A precondition on the inputs does not hold.
    #[error("domain error: {0}")]
    Domain(String),

    /// A zero and a pole meet in the same term, so the term has no value.
    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error("truncation not certified after {terms} terms ({side} side)")]
    MaxTermsExceeded { side: &'static str, terms: usize },

    #[error("no valid instance of {id} found after {attempts} attempts")]
    SamplingExhausted { id: String, attempts: usize },

    /// A literal display factor vanished or blew up at the requested point.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

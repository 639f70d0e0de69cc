//! Crate-wide error type.

/// Errors surfaced by the library.
///
/// `Parameter` covers caller mistakes that are detectable from arguments
/// alone; `Contract` covers sequencing violations (packets ingested out of
/// order, deadlines decided twice, mismatched payload lengths mid-stream);
/// `NotApplicable` marks a formula asked about a design outside its
/// hypotheses; `Numeric` marks a computation that failed to converge or left
/// its validity range.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Arguments outside an operation's domain (bad geometry, invalid parameters, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// An exhaustive computation would exceed its enumeration cap.
    #[error("size error: {what} is {got}, limit is {limit}")]
    Size {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    /// Two positive arrival times compared equal; the caller should resample.
    #[error("arrival-time tie between sites {0} and {1}; resample")]
    Tie(usize, usize),
    /// A numerical procedure cannot produce a meaningful answer at the requested settings.
    #[error("diagnostics: {0}")]
    Diagnostics(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

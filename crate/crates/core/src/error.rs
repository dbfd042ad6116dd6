use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed arguments: non-finite values, dimension mismatches, empty sets.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A formula was evaluated outside its domain (e.g. division by a zero feature total).
    #[error("domain error: {0}")]
    Domain(String),
    /// Inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Training produced a non-finite loss or parameter.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::Error::InvalidInput(alloc::format!($($arg)*)) };
}
pub(crate) use invalid;

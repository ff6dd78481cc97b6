use alloc::string::String;

/// Errors raised by the numerical core.
///
/// The variants map onto the exit-code contract of the command line tool:
/// domain and configuration problems are caller mistakes, numeric errors are
/// failures of a quadrature, iteration or cross-check.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter is outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A quadrature, iteration or internal cross-check failed.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A root bracket does not contain a sign change.
    #[error("bracket error: mu({lo_lambda}) = {lo_mu}, mu({hi_lambda}) = {hi_mu}")]
    Bracket {
        lo_lambda: f64,
        lo_mu: f64,
        hi_lambda: f64,
        hi_mu: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! numeric {
    ($($arg:tt)*) => { $crate::Error::Numeric(alloc::format!($($arg)*)) };
}
pub(crate) use {domain, numeric};

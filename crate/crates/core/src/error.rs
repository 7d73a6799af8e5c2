use thiserror::Error;

/// Errors produced by the estimation and testing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Kernel derivatives are only available up to second order.
    #[error("unsupported derivative order {0} (expected 0, 1 or 2)")]
    UnsupportedOrder(u8),

    /// The piecewise-polynomial form needs a multiweight kernel with integer exponent.
    #[error("piecewise-polynomial representation unavailable for the {0} kernel")]
    RepresentationUnavailable(String),

    /// Every observation has the same value.
    #[error("degenerate sample: all {0} observations are equal")]
    DegenerateSample(usize),

    /// Malformed textual input (kernel names, data files, grids).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

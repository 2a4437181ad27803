//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A point lies outside the domain [0,1].
    #[error("point {0} outside the domain [0,1]")]
    Domain(f64),

    /// The exponent is not finitely representable at this point.
    #[error("exponent unbounded at t = {0}")]
    UnboundedPoint(f64),

    /// Dual exponent requested where p(t) = 1.
    #[error("dual exponent pole at t = {0} (p(t) = 1)")]
    Pole(f64),

    /// Operation not available for this variant.
    #[error("unsupported variant for {op}: {detail}")]
    UnsupportedVariant { op: &'static str, detail: String },

    /// A constructor argument is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The permutation passed to a shuffle is not measure-preserving.
    #[error("permutation is not measure-preserving: {0}")]
    NotMeasurePreserving(String),

    /// Budget exhausted without a certified finite value and without
    /// divergence evidence. Distinct from a Divergent result.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// Two routes to the same quantity disagree beyond tolerance.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    /// A textual spec (exponent, function, config) failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// Filesystem problem while writing reports.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// Errors produced by construction, sampling and solver entry points.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A point lies outside the open domain, or an operand violates a
    /// mathematical precondition (non-positive density value, empty box, ...).
    Domain(&'static str),
    /// Invalid configuration: bad parameters, unusable density family,
    /// rejection sampler starved below its acceptance floor, ...
    Config(String),
    /// The two measures handed to a balanced solver do not carry the same
    /// mass (relative mismatch above `1e-9`).
    Unbalanced { left: f64, right: f64 },
    /// Instance exceeds the configured exact-solver size cap; the entropic
    /// solver handles larger instances approximately.
    SizeCap { atoms: usize, cap: usize },
    /// A measure with zero total mass cannot be normalized.
    DegenerateMeasure,
    /// An iterative solver ran out of iterations without meeting its
    /// internal tolerance.
    NotConverged { iterations: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Unbalanced { left, right } => write!(
                f,
                "unbalanced input: total masses {left} and {right} differ beyond 1e-9 relative"
            ),
            Error::SizeCap { atoms, cap } => write!(
                f,
                "instance with {atoms} atoms exceeds the exact-solver cap of {cap}; \
                 raise the cap or use the entropic solver"
            ),
            Error::DegenerateMeasure => write!(f, "measure has zero total mass"),
            Error::NotConverged { iterations } => {
                write!(f, "solver did not converge within {iterations} iterations")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

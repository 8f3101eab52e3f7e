use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Structural problem with an input (shape, range, admissibility).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A model invariant (domination, expansion, contraction, placement) failed.
    #[error("model invariant violated at {location}: {message}")]
    Invariant { location: String, message: String },

    /// The operation needs an irreducible transition matrix.
    #[error("transition matrix is not irreducible")]
    NotIrreducible,

    /// A configured enumeration or alphabet limit would be exceeded.
    #[error("resource limit exceeded: {what} needs {needed}, limit is {limit}")]
    Resource {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    /// Checked integer arithmetic overflowed.
    #[error("integer overflow while {0}")]
    Overflow(&'static str),

    /// A parameter lies outside its closed range.
    #[error("parameter {name} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// An iterative method failed to meet its tolerance.
    #[error("{0} did not converge")]
    NotConverged(&'static str),

    /// The requested computation is not defined for this model kind.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Katok filtering kept no block.
    #[error("no block of length {block_length} is typical at epsilon {epsilon}")]
    EmptyFamily {
        block_length: usize,
        epsilon: f64,
        /// Histogram of |−(1/n) log μ[w] − h| over 10 equal bins of [0, max].
        histogram: Vec<u64>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn invariant(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invariant {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by an exceeded limit (CLI exit code 3).
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. } | Error::Overflow(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

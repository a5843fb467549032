//! Shared error type.

use std::fmt;

/// Errors produced by the numeric kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the documented domain of an operation.
    Domain(String),
    /// The symmetric tridiagonal eigensolver exceeded its iteration budget.
    EigenNoConverge { size: usize },
    /// Adaptive integration exhausted its evaluation budget before reaching
    /// the requested tolerance.
    BudgetExhausted {
        evaluations: usize,
        error_estimate: f64,
    },
    /// The Gram system of the least-squares oracle was numerically singular.
    SingularSystem { dim: usize },
    /// A function handed to a constructor violated its declared Lipschitz
    /// constant on the spot-check grid.
    LipschitzViolation { measured: f64, declared: f64 },
    /// A function handed to a constructor left its declared range.
    RangeViolation { value: f64 },
    /// A constructed object failed its built-in verification sweep.
    VerificationFailed(String),
    /// Layer or vector shapes do not line up.
    ShapeMismatch(String),
    /// An input vector is not unit-norm within the configured tolerance.
    NotUnitVector { norm: f64 },
    /// A serialized network file is malformed or carries an unsupported
    /// version tag.
    Format(String),
    /// Underlying I/O failure (message of the originating `std::io::Error`).
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::EigenNoConverge { size } => {
                write!(f, "tridiagonal eigensolver did not converge (size {size})")
            }
            Error::BudgetExhausted {
                evaluations,
                error_estimate,
            } => write!(
                f,
                "adaptive integration budget of {evaluations} evaluations exhausted \
                 (error estimate {error_estimate:e})"
            ),
            Error::SingularSystem { dim } => {
                write!(f, "least-squares Gram system of dimension {dim} is singular")
            }
            Error::LipschitzViolation { measured, declared } => write!(
                f,
                "function violates declared Lipschitz constant: measured {measured}, \
                 declared {declared}"
            ),
            Error::RangeViolation { value } => {
                write!(f, "function value {value} outside declared range [-1, 1]")
            }
            Error::VerificationFailed(msg) => write!(f, "verification failed: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::NotUnitVector { norm } => {
                write!(f, "input vector has norm {norm}, expected unit length")
            }
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

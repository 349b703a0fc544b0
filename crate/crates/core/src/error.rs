use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,
    #[error("point is not on the boundary (norm = {0})")]
    NotOnBoundary(String),
    #[error("operation requires a piecewise-linear body")]
    NotPiecewiseLinear,
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("inadmissible direction: {0}")]
    Inadmissible(String),
    #[error("lemma violation: {0}")]
    LemmaViolation(String),
    #[error("empty direction list")]
    EmptyDirections,
    #[error("no pool direction illuminates vertex {0}")]
    Uncoverable(String),
    #[error("certificate mismatch: {0}")]
    Certificate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid group spec: {0}")]
    InvalidGroup(String),

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("nonsmooth expression: {0}")]
    Nonsmooth(String),

    #[error("boundary error: {0}")]
    Boundary(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("perturbation failed: {0}")]
    Perturbation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error types shared by expression evaluation.
//!
//! Parsing, the transformer engine, and the numeric modules define their own
//! error enums next to their code; evaluation errors live here because both
//! the language layer and the engine produce them.

use thiserror::Error;

/// Errors raised while evaluating an expression against an environment.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("type mismatch: expected {expected}, got {found}")]
    TypeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("index {index} out of bounds for range {lo}..{hi}")]
    IndexOutOfBounds { index: i64, lo: i64, hi: i64 },

    #[error("division by zero")]
    DivisionByZero,

    #[error("square root of negative value {0}")]
    SqrtOfNegative(f64),

    #[error("amplitude vector must have at least one entry")]
    EmptyVector,

    #[error("invalid index bounds {lo}..{hi}")]
    InvalidBounds { lo: i64, hi: i64 },

    #[error("integer out of supported range: {0}")]
    IntOutOfRange(String),

    #[error("exponent out of supported range")]
    ExponentOutOfRange,
}

pub type EvalResult<T> = Result<T, EvalError>;

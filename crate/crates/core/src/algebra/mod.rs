//! Operator words, formal linear combinations, and model specifications.

mod expr;
mod model;

pub use expr::{annihilator_excess_is_zero, expand_variable, OpExpr, OpKind, OpSymbol, OpWord};
pub use model::{ModelDocument, ModelSpec, MomentQuery, QPoint};

use thiserror::Error;

use crate::exactmath::ExactError;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("model dimension must be positive")]
    EmptyModel,
    #[error("{what} must be {expected} entries per dimension")]
    ShapeMismatch { what: &'static str, expected: usize },
    #[error("coordinate index {index} outside 1..={d}")]
    IndexOutOfRange { index: usize, d: usize },
    #[error("moment query must be nonempty")]
    EmptyQuery,
    #[error("invalid moment query `{0}`: expected comma-separated indices")]
    InvalidQuery(String),
    #[error("invalid operator symbol `{0}`")]
    InvalidSymbol(String),
    #[error("invalid operator expression `{0}`: {1}")]
    InvalidExpr(String, String),
    #[error("word `{0}` is not an annihilator prefix followed by variables")]
    InvalidShape(String),
    #[error("invalid q point `{0}`: expected `symbolic` or a rational")]
    InvalidQPoint(String),
    #[error("model file is not valid JSON at line {line}, column {column}: {message}")]
    InvalidJson {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("expected an exact rational string, got `{0}`")]
    InvalidRationalField(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

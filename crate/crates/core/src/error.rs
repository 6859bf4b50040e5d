use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    /// Any failure raised while evaluating a family at a particular `h`.
    #[error("at h = {h:e}: {source}")]
    AtH {
        h: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("lambda = {0} is not resolved: singular resolvent in the tail window")]
    UnresolvedPoint(Complex64),

    #[error("quadrature node {index} (lambda = {lambda}) hits the spectrum")]
    SingularOnContour { index: usize, lambda: Complex64 },

    #[error("contour does not enclose the spectrum")]
    NonEnclosing,

    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_h(h: f64, err: Error) -> Error {
        match err {
            already @ Error::AtH { .. } => already,
            other => Error::AtH {
                h,
                source: Box::new(other),
            },
        }
    }

    pub(crate) fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Error {
        Error::Schema {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

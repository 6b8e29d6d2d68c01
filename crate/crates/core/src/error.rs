use thiserror::Error;

use crate::densexpr::{EvalError, ParseError};
use crate::quadrature::QuadError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Quadrature(#[from] QuadError),

    #[error("component {index}: {message}")]
    Spec { index: usize, message: String },

    #[error("component {index}: density `{source_text}`: {error}")]
    DensityParse {
        index: usize,
        source_text: String,
        error: ParseError,
    },

    #[error("component {index}: density evaluation failed: {error}")]
    DensityEval { index: usize, error: EvalError },

    #[error("component {index}: density is negative ({value:e}) at {at}")]
    NegativeDensity { index: usize, value: f64, at: String },

    #[error("malformed measure document: {0}")]
    Document(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("singular integrand: {0}")]
    Singular(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error(
        "largest eigenvalue did not converge after {iterations} iterations \
         (last Rayleigh quotient {last:e})"
    )]
    NormNotConverged { iterations: usize, last: f64 },
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("complexification needs an even dimension, got {0}")]
    OddDimension(usize),

    #[error("invalid tolerance {name} = {value} (must lie in (0, 1))")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error("convex weights must be nonnegative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },

    #[error("perturbation radius must be positive, got {0}")]
    NonPositiveDelta(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("index {index} lies outside the finite-difference stencil domain")]
    OutOfStencil { index: usize },

    #[error("empty region: {0}")]
    EmptyRegion(&'static str),

    #[error("every cell of the grid is masked out")]
    AllMasked,

    #[error("mollifier radius {radius} is too large or too small for the grid: {reason}")]
    KernelSupport { radius: f64, reason: &'static str },

    #[error("fiber Hessian block is not strictly positive (min eigenvalue {min_eig})")]
    SingularFiber { min_eig: f64 },

    #[error("point is not a fiber minimum: |df/dy| = {residual}")]
    NotStationary { residual: f64 },

    #[error("field is not torus-invariant in the second variable (deviation {deviation})")]
    NotTorusInvariant { deviation: f64 },

    #[error("overflow guard: alpha * max|w|^2 = {value} exceeds {limit}")]
    Overflow { value: f64, limit: f64 },

    #[error("malformed descriptor `{input}`: {reason}")]
    Descriptor { input: String, reason: String },

    #[error("malformed grid file {path}: {reason}")]
    GridFormat { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }

    pub(crate) fn descriptor(input: &str, reason: impl Into<String>) -> Self {
        Error::Descriptor {
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}

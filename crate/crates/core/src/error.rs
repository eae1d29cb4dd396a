use std::path::PathBuf;

use thiserror::Error;

use crate::numerics::Matrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("rank deficient: column {column} is numerically dependent on the preceding columns")]
    RankDeficient { column: usize },

    #[error(
        "filter {filter} maps the input to a rank-deficient matrix (column {column} dependent)"
    )]
    FilterRankDeficient { filter: usize, column: usize },

    #[error("{what} failed to converge after {iterations} iterations")]
    DecompositionFailed {
        what: &'static str,
        iterations: usize,
    },

    #[error("value {value} outside of allowed range {range}")]
    OutOfRange { value: f64, range: &'static str },

    #[error("point lies on the cut locus (largest principal angle {max_angle} rad); geodesic is not unique")]
    CutLocus { max_angle: f64 },

    #[error(
        "kernel matrix is not positive semidefinite (min eigenvalue {min_eig:e}, max {max_eig:e})"
    )]
    NumericalKernel { min_eig: f64, max_eig: f64 },

    #[error("objective returned a non-finite value ({value}) at iteration {iteration}")]
    ObjectiveEvaluation {
        value: f64,
        iteration: usize,
        iterate: Box<Matrix>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("clustering is degenerate: {0}")]
    Degenerate(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("data generation failed: {0}")]
    Generation(String),

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by the command-line front end to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) | Error::OutOfRange { .. } => ErrorClass::Usage,
            Error::InvalidMatrix(_)
            | Error::DimensionMismatch(_)
            | Error::Csv { .. }
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Generation(_) => ErrorClass::Data,
            Error::NotSymmetric { .. }
            | Error::RankDeficient { .. }
            | Error::FilterRankDeficient { .. }
            | Error::DecompositionFailed { .. }
            | Error::CutLocus { .. }
            | Error::NumericalKernel { .. }
            | Error::ObjectiveEvaluation { .. }
            | Error::Degenerate(_)
            | Error::Training(_) => ErrorClass::Numerical,
        }
    }
}

pub(crate) fn dims(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}

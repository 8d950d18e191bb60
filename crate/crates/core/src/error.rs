use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation angle {angle} is within 1e-6 of pi; logarithm undefined")]
    AngleNearPi { angle: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate cluster: {0}")]
    DegenerateCluster(String),

    #[error("matrix is not positive semi-definite (pivot {pivot:e})")]
    CholeskyFailure { pivot: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("normal equations singular after damping reached {damping:e}")]
    SingularNormalEquations { damping: f64 },

    #[error("no active voxels under the configured thresholds")]
    NoActiveVoxels,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("unsupported format in {path}: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },

    #[error("quaternion on line {line} of {path} has norm {norm}")]
    NonUnitQuaternion {
        path: PathBuf,
        line: usize,
        norm: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

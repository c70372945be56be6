//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix constructor was handed a NaN or infinite entry.
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    /// The symmetry pre-condition of the eigensolver failed.
    #[error("matrix is not symmetric: max asymmetry {max_asymmetry:.3e} exceeds {allowed:.3e}")]
    NonSymmetric { max_asymmetry: f64, allowed: f64 },

    /// The Jacobi iteration did not drive the off-diagonal mass to zero.
    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    /// A Cholesky pivot was non-positive; the input is not positive definite.
    #[error("matrix is not positive definite: pivot {pivot:.3e} at index {index}")]
    NotPositiveDefinite { pivot: f64, index: usize },

    /// Operand shapes do not conform.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Covariance estimation needs at least two samples.
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    /// A class model whose spectrum is numerically rank-deficient cannot be whitened.
    #[error("singular class model: min eigenvalue {min_eigenvalue:.3e} vs max {max_eigenvalue:.3e}")]
    SingularModel {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    /// A feature block referenced a class label with no trained model.
    #[error("unknown label: {0}")]
    UnknownLabel(String),

    /// Classification was attempted against an empty training set.
    #[error("empty training set")]
    EmptyTrainingSet,

    /// Two sequences that must be paired have different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// An IDX file did not start with the expected magic number.
    #[error("bad IDX magic: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },

    /// An IDX file ended before its declared payload.
    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    /// A label byte outside the digit range 0-9.
    #[error("label out of range: {value}")]
    LabelOutOfRange { value: u8 },

    /// A label filter matched no samples.
    #[error("no samples match the requested labels")]
    NoMatchingSamples,

    /// A transformation set does not fit the signal's geometry.
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    /// An I/O failure, annotated with the offending path.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed configuration: feature-spec text, class sets, hyperparameters.
    #[error("invalid configuration: {0}")]
    ConfigError(String),
}

impl Error {
    /// Wrap an I/O error with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "matrix is not Hermitian: max |M - M^dagger| = {deviation:.3e} exceeds {tolerance:.1e}"
    )]
    NonHermitianInput { deviation: f64, tolerance: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("state is not pure: purity {purity:.12}")]
    NotPure { purity: f64 },

    #[error("invalid bipartite split: {0}")]
    InvalidSplit(String),

    #[error("subspace dimension {dim_r} exceeds embedding dimension {embed_dim}")]
    SubspaceTooLarge { dim_r: usize, embed_dim: usize },

    #[error("need at least {required} samples, got {found}")]
    InsufficientSamples { required: usize, found: usize },

    #[error(
        "weight table is not a symmetric nonnegative table with zero diagonal at ({row}, {col})"
    )]
    AsymmetricWeights { row: usize, col: usize },

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("subsystem speed routes disagree by {difference:.3e} (tolerance {tolerance:.1e})")]
    SpeedRouteMismatch { difference: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigendecomposition failed to converge")]
    EigenFailure,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("manifest not found: {}", .0.display())]
    ManifestMissing(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

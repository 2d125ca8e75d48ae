use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, SympError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SympError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} outside horizon [0, {horizon}]")]
    OutOfHorizon { index: usize, horizon: usize },

    #[error("singular coefficient at k = {index}: {reason}")]
    SingularCoefficient { index: usize, reason: String },

    #[error("non-finite value produced during propagation at k = {index}")]
    Propagation { index: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("block structure not detected: {0}")]
    Structure(String),

    #[error("spectral parameter must be non-real, got {0}")]
    RealLambda(Complex64),

    #[error("boundary condition matrix is singular at N = {0}")]
    BoundaryCondition(usize),

    #[error("invalid tolerance configuration: {0}")]
    Tolerance(String),
}

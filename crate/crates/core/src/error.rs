use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("difference set contains duplicate points")]
    DuplicatePoints,

    #[error("difference set of size {size} exceeds the cap of {cap}")]
    DifferenceOrderTooLarge { size: usize, cap: usize },

    #[error("two distinct points were mapped onto {0}")]
    Collision(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("region {region} is not contained in the window {window}")]
    RegionOutsideWindow { region: String, window: String },

    #[error("preimage of {0} leaves the sampling window")]
    PreimageEscape(String),

    #[error("window inner radius {actual} is too large: iterates up to {n_max} need at most {required}")]
    WindowTooSmall { required: f64, actual: f64, n_max: usize },

    #[error("partition size {0} out of range")]
    PartitionSizeOutOfRange(usize),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("integrand `{0}` has no declared support")]
    MissingSupport(String),

    #[error("transformation `{0}` is not deterministic")]
    NotDeterministic(String),

    #[error("worker pool: {0}")]
    WorkerPool(String),
}

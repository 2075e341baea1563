use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no comparable sites between sequences")]
    UndefinedDistance,

    #[error("distance is saturated (raw mismatch proportion {p_distance:.4})")]
    SaturatedDistance { p_distance: f64 },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("kernel error for pair ({a}, {b}): {source}")]
    KernelPair {
        a: String,
        b: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid dissimilarity matrix: {0}")]
    InvalidMatrix(String),

    #[error("group of size {size} is too small (at least 2 required)")]
    DegenerateGroup { size: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("invalid covariance matrix: {0}")]
    InvalidCovariance(String),

    #[error("variance of the statistic is degenerate ({0:e})")]
    DegenerateVariance(f64),

    #[error("n = {n} exceeds the supported range {min}..={max} for exhaustive enumeration")]
    Capacity { n: usize, min: usize, max: usize },

    #[error("ambiguous nearest centroids: groups {0:?} are tied")]
    AmbiguousCentroid(Vec<usize>),

    #[error("kernel {kernel} is not applicable: {reason}")]
    Unsupported { kernel: String, reason: String },
}

//! U-statistic tests for group separation, group homogeneity and the
//! classification of new observations, over arbitrary dissimilarity
//! matrices.
//!
//! The usual flow is to build a [`DissimilarityMatrix`] from a [`SampleSet`]
//! with a [`Kernel`] (or load one computed elsewhere), then run one of
//! [`u_test`], [`homogeneity_test`] or [`classification_test`]. All
//! resampling is seeded; the same seed gives bit-identical results for any
//! thread count.

pub mod classify;
pub mod error;
pub mod homogeneity;
pub mod kernels;
pub mod rng;
pub mod separation;
pub mod simulate;
pub mod ustat;
pub mod variance;

pub use classify::{
    centroid_multiway_classify, classification_test, classification_test_matrix, d_statistic,
    ClassificationResult,
};
pub use error::{Error, Result};
pub use homogeneity::{
    cluster_optimal_partition, enumerate_configurations, exhaustive_optimal_partition,
    homogeneity_test, max_test, HomogeneityConfig, HomogeneityMethod, HomogeneityResult, MaxTest,
};
pub use kernels::{
    build_matrix, hamming, hky_distance, sq_euclidean, BaseFreqs, DissimilarityMatrix, Kernel,
    KernelTag, Payload, Sample, SampleSet,
};
pub use separation::{u_test, TestResult};
pub use simulate::{run_study, StudyConfig, StudyKind, StudyRow, StudyTable, Tree};
pub use ustat::{bn, un_decomposition, Decomposition, Partition};
pub use variance::{bootstrap_var_bn, closed_form_var_bn, VarianceEstimate, VarianceSource};

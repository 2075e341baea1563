//! Inputs shared by the benchmarks.

use uclust_core::simulate::gaussian_groups;
use uclust_core::{build_matrix, DissimilarityMatrix, Kernel, Partition};

/// Squared Euclidean matrix of two Gaussian groups whose means differ by
/// `shift` in every coordinate.
pub fn gaussian_matrix(
    n1: usize,
    n2: usize,
    length: usize,
    shift: f64,
    seed: u64,
) -> DissimilarityMatrix {
    let data = gaussian_groups(n1, n2, length, shift, seed).expect("valid generator arguments");
    build_matrix(&data, &Kernel::SqEuclidean).expect("finite data")
}

/// The split into the first `n1` and the remaining indices.
pub fn leading_split(n1: usize, n: usize) -> Partition {
    Partition::new((0..n1).collect(), (n1..n).collect(), n)
        .expect("both sides have at least two members")
}

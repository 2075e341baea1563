//! Permutation U test for the separation of two groups.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DissimilarityMatrix;
use crate::rng;
use crate::ustat::{bn, bn_multiset, Partition};

pub const DEFAULT_PERMUTATIONS: usize = 999;
pub const MIN_PERMUTATIONS: usize = 99;

/// Outcome of a resampling test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub replicates: usize,
    pub method: String,
    pub seed: u64,
    pub alpha: f64,
    pub reject: bool,
    pub n1: usize,
    pub n2: usize,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Add-one Monte Carlo p-value.
#[inline]
pub(crate) fn add_one_p(exceed: usize, replicates: usize) -> f64 {
    (exceed + 1) as f64 / (replicates + 1) as f64
}

/// Number of label permutations whose `Bn` is at least `observed`.
///
/// Each permutation shuffles the pooled indices of `p` and splits them back
/// into groups of the original sizes. Groups are sorted before evaluation so
/// the same split always gives a bit-identical statistic.
pub(crate) fn permutation_exceedances(
    d: &DissimilarityMatrix,
    p: &Partition,
    observed: f64,
    replicates: usize,
    seed: u64,
) -> usize {
    let pooled: Vec<usize> = p.s1().iter().chain(p.s2()).copied().collect();
    let n1 = p.n1();
    (0..replicates)
        .into_par_iter()
        .map_init(
            || pooled.clone(),
            |buf, r| {
                buf.copy_from_slice(&pooled);
                let mut rng = rng::stream(seed, r as u64);
                buf.shuffle(&mut rng);
                let (g1, g2) = buf.split_at_mut(n1);
                g1.sort_unstable();
                g2.sort_unstable();
                usize::from(bn_multiset(d, g1, g2) >= observed)
            },
        )
        .sum()
}

/// One-sided permutation test of `H0: no separation` against large `Bn`.
pub fn u_test(
    d: &DissimilarityMatrix,
    p: &Partition,
    replicates: usize,
    seed: u64,
    alpha: f64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if replicates < MIN_PERMUTATIONS {
        return Err(Error::Domain(format!(
            "at least {MIN_PERMUTATIONS} permutations required, got {replicates}"
        )));
    }
    if let Some(&i) = p.s1().iter().chain(p.s2()).find(|&&i| i >= d.n()) {
        return Err(Error::InvalidPartition(format!(
            "index {i} out of range for a matrix of size {}",
            d.n()
        )));
    }
    let observed = bn(d, p);
    let exceed = permutation_exceedances(d, p, observed, replicates, seed);
    let p_value = add_one_p(exceed, replicates);
    Ok(TestResult {
        statistic: observed,
        p_value,
        replicates,
        method: "u_test_permutation".into(),
        seed,
        alpha,
        reject: p_value < alpha,
        n1: p.n1(),
        n2: p.n2(),
    })
}

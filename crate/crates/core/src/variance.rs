//! Variance of `Bn` under group homogeneity.
//!
//! For the squared Euclidean kernel and iid observations,
//! `Var(Bn) = C(n, n1) σ⁴` where `σ⁴ = 4 vec(Σ)'vec(Σ)` does not depend on the
//! split. One bootstrap estimate at `n1 = ⌊n/2⌋` therefore gives the variance
//! for every split size through the ratio `C(n, j) / C(n, i)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DissimilarityMatrix;
use crate::rng;
use crate::ustat::{bn, bn_multiset, Partition};

pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 1000;
pub const MIN_BOOTSTRAP_REPLICATES: usize = 100;

/// Relative floor below which an estimated variance counts as zero.
const ZERO_VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSource {
    ClosedForm,
    Bootstrap,
}

/// `Var(Bn)` at a reference split size, rescalable to any other split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub n: usize,
    pub ref_n1: usize,
    pub var_at_ref: f64,
    pub source: VarianceSource,
    pub replicates: usize,
    pub seed: u64,
}

impl VarianceEstimate {
    /// Closed-form variance for a known `σ⁴`, referenced at `⌊n/2⌋`.
    pub fn closed_form(n: usize, sigma4: f64) -> Result<Self> {
        let ref_n1 = n / 2;
        Ok(VarianceEstimate {
            n,
            ref_n1,
            var_at_ref: closed_form_var_bn(n, ref_n1, sigma4)?,
            source: VarianceSource::ClosedForm,
            replicates: 0,
            seed: 0,
        })
    }
}

fn check_split(n: usize, n1: usize) -> Result<()> {
    if n < 4 || n1 < 2 || n1 + 2 > n {
        return Err(Error::Domain(format!(
            "split size n1 = {n1} invalid for n = {n} (need n >= 4 and 2 <= n1 <= n-2)"
        )));
    }
    Ok(())
}

/// `C(n, n1) = n1 n2 / (n² (n-1)²) · (2n² - 6n + 4) / ((n1-1)(n2-1))`.
pub fn c_coefficient(n: usize, n1: usize) -> Result<f64> {
    check_split(n, n1)?;
    let (nf, f1) = (n as f64, n1 as f64);
    let f2 = nf - f1;
    Ok(f1 * f2 / (nf * nf * (nf - 1.0) * (nf - 1.0))
        * ((2.0 * nf * nf - 6.0 * nf + 4.0) / ((f1 - 1.0) * (f2 - 1.0))))
}

/// `σ⁴ = 4 Σ_k Σ_s Σ_ks²` for a covariance matrix given by rows.
pub fn sigma4_from_cov(sigma: &[Vec<f64>]) -> Result<f64> {
    let l = sigma.len();
    let mut total = 0.0;
    for (k, row) in sigma.iter().enumerate() {
        if row.len() != l {
            return Err(Error::InvalidCovariance(format!(
                "row {k} has {} entries (expected {l})",
                row.len()
            )));
        }
        for (s, &v) in row.iter().enumerate() {
            if (v - sigma[s][k]).abs() > 1e-9 {
                return Err(Error::InvalidCovariance(format!(
                    "entries ({k}, {s}) and ({s}, {k}) differ"
                )));
            }
            total += v * v;
        }
    }
    Ok(4.0 * total)
}

pub fn closed_form_var_bn(n: usize, n1: usize, sigma4: f64) -> Result<f64> {
    if !(sigma4 > 0.0 && sigma4.is_finite()) {
        return Err(Error::Domain(format!(
            "sigma4 must be positive, got {sigma4}"
        )));
    }
    Ok(c_coefficient(n, n1)? * sigma4)
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)
}

fn zero_variance_check(d: &DissimilarityMatrix, var: f64) -> Result<f64> {
    let scale = d.mean_offdiag();
    if scale > 0.0 && var < ZERO_VARIANCE_FLOOR * scale * scale {
        return Err(Error::DegenerateVariance(var));
    }
    Ok(var)
}

/// Bootstrap estimate of `Var(Bn)` at `n1 = ⌊n/2⌋`.
///
/// Each replicate draws `n` indices with replacement from the pooled sample,
/// puts the first `⌊n/2⌋` draws in the first group and the rest in the second,
/// and evaluates `Bn` on that resample. Replicate `r` uses stream `r` of
/// `seed`, so the estimate does not depend on the thread count.
pub fn bootstrap_var_bn(
    d: &DissimilarityMatrix,
    replicates: usize,
    seed: u64,
) -> Result<VarianceEstimate> {
    let n = d.n();
    if n < 4 {
        return Err(Error::Domain(format!(
            "bootstrap variance needs n >= 4, got {n}"
        )));
    }
    if replicates < MIN_BOOTSTRAP_REPLICATES {
        return Err(Error::Domain(format!(
            "at least {MIN_BOOTSTRAP_REPLICATES} bootstrap replicates required, got {replicates}"
        )));
    }
    let ref_n1 = n / 2;
    let stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, r as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            bn_multiset(d, &idx[..ref_n1], &idx[ref_n1..])
        })
        .collect();
    let var = zero_variance_check(d, sample_variance(&stats))?;
    Ok(VarianceEstimate {
        n,
        ref_n1,
        var_at_ref: var,
        source: VarianceSource::Bootstrap,
        replicates,
        seed,
    })
}

/// Bootstrap `Var(Bn)` for one specific configuration, resampling each group
/// separately with replacement. Used for kernels without a split-invariant
/// `σ⁴`, where the variance has to be estimated configuration by
/// configuration.
pub fn configuration_bootstrap_var(
    d: &DissimilarityMatrix,
    p: &Partition,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    if replicates < 2 {
        return Err(Error::Domain(
            "at least 2 bootstrap replicates required".into(),
        ));
    }
    let stats: Vec<f64> = (0..replicates)
        .map(|r| {
            let mut rng = rng::stream(seed, r as u64);
            let g1: Vec<usize> = (0..p.n1())
                .map(|_| p.s1()[rng.random_range(0..p.n1())])
                .collect();
            let g2: Vec<usize> = (0..p.n2())
                .map(|_| p.s2()[rng.random_range(0..p.n2())])
                .collect();
            bn_multiset(d, &g1, &g2)
        })
        .collect();
    zero_variance_check(d, sample_variance(&stats))
}

/// `Var_j(Bn) = C(n, j) / C(n, i) · Var_i(Bn)`.
pub fn rescale_var(v: &VarianceEstimate, target_n1: usize) -> Result<f64> {
    check_split(v.n, target_n1)?;
    if target_n1 == v.ref_n1 {
        return Ok(v.var_at_ref);
    }
    Ok(v.var_at_ref * c_coefficient(v.n, target_n1)? / c_coefficient(v.n, v.ref_n1)?)
}

/// `Bn / sqrt(Var(Bn))` with the variance rescaled to the partition's split.
/// The clustering objective is the negation of this value.
pub fn standardized_bn(
    d: &DissimilarityMatrix,
    p: &Partition,
    v: &VarianceEstimate,
) -> Result<f64> {
    if v.n != d.n() || p.n() != d.n() {
        return Err(Error::Domain(format!(
            "variance estimate for n = {} used with a matrix of size {} and partition of size {}",
            v.n,
            d.n(),
            p.n()
        )));
    }
    let var = rescale_var(v, p.n1())?;
    if var <= 0.0 || !var.is_finite() {
        return Err(Error::DegenerateVariance(var));
    }
    Ok(bn(d, p) / var.sqrt())
}

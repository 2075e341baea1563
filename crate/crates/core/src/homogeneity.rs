//! Group homogeneity testing.
//!
//! A group of `n` observations is homogeneous when none of its
//! `γ = 2^(n-1) - n - 1` two-subgroup arrangements (both sides of size at
//! least 2) separates significantly. Three procedures are offered:
//!
//! * `multiple`: a permutation U test on every arrangement, uncorrected;
//! * `bonferroni`: the same tests at level `α / γ`;
//! * `max`: find the arrangement maximising the standardized statistic
//!   `Bn / sqrt(Var(Bn))` and compare it with the distribution `Φ(x)^γ` of
//!   the maximum of `γ` independent standard normals.
//!
//! For the squared Euclidean kernel the variance at every split size follows
//! from a single bootstrap, so the maximum can be found by a local search
//! ([`cluster_optimal_partition`]) instead of enumeration.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::kernels::{DissimilarityMatrix, KernelTag};
use crate::rng;
use crate::separation::{check_alpha, u_test};
use crate::ustat::{bn, bn_from_sums, within_sum, Partition};
use crate::variance::{
    bootstrap_var_bn, configuration_bootstrap_var, rescale_var, standardized_bn, VarianceEstimate,
    DEFAULT_BOOTSTRAP_REPLICATES,
};

pub const MIN_GROUP_SIZE: usize = 4;
/// Largest `n` for which every configuration is enumerated.
pub const MAX_ENUMERATION_N: usize = 22;
/// Largest `n` for the exhaustive optimum with split-invariant variance.
pub const MAX_EXHAUSTIVE_N: usize = 18;
/// Largest `n` for the per-configuration bootstrap route (non-Euclidean kernels).
pub const MAX_PER_CONFIGURATION_N: usize = 14;
pub const DEFAULT_RESTARTS: usize = 20;
/// The max method enumerates instead of searching up to this size.
pub const DEFAULT_EXHAUSTIVE_THRESHOLD: usize = 12;

const MAX_SWEEPS: usize = 10_000;

/// `γ = 2^(n-1) - n - 1` as a float (infinite beyond `n ≈ 1024`).
pub fn configuration_count(n: usize) -> f64 {
    if n < 64 {
        ((1u128 << (n - 1)) - n as u128 - 1) as f64
    } else {
        log_configuration_count(n).exp()
    }
}

/// `ln γ`, finite for any `n >= 4`.
pub fn log_configuration_count(n: usize) -> f64 {
    if n < 64 {
        let g = (1u128 << (n - 1)) - n as u128 - 1;
        (g as f64).ln()
    } else {
        (n - 1) as f64 * std::f64::consts::LN_2
            + (-((n + 1) as f64) * 0.5f64.powi(n as i32 - 1)).ln_1p()
    }
}

/// Masks over indices `1..n`; index 0 always belongs to the first group.
fn valid_mask(mask: u64, n: usize) -> bool {
    let n1 = 1 + mask.count_ones() as usize;
    n1 >= 2 && n - n1 >= 2
}

fn mask_to_partition(mask: u64, n: usize) -> Partition {
    let mut s1 = vec![0];
    let mut s2 = Vec::with_capacity(n);
    for i in 1..n {
        if mask >> (i - 1) & 1 == 1 {
            s1.push(i);
        } else {
            s2.push(i);
        }
    }
    Partition::new(s1, s2, n).expect("valid mask yields a valid partition")
}

fn check_enumerable(n: usize, max: usize) -> Result<()> {
    if !(MIN_GROUP_SIZE..=max).contains(&n) {
        return Err(Error::Capacity {
            n,
            min: MIN_GROUP_SIZE,
            max,
        });
    }
    Ok(())
}

/// Every unordered split of `0..n` into two groups of size at least 2, each
/// listed once with index 0 in the first group.
pub fn enumerate_configurations(n: usize) -> Result<impl Iterator<Item = Partition>> {
    check_enumerable(n, MAX_ENUMERATION_N)?;
    Ok((0..1u64 << (n - 1))
        .filter(move |&m| valid_mask(m, n))
        .map(move |m| mask_to_partition(m, n)))
}

/// `(z, s1)` ordering: larger z wins, ties go to the lexicographically
/// smallest first group.
fn better(a: &(f64, Partition), b: &(f64, Partition)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1.s1() < b.1.s1())
}

fn pick_best(a: (f64, Partition), b: (f64, Partition)) -> (f64, Partition) {
    if better(&b, &a) {
        b
    } else {
        a
    }
}

/// Standard deviation of `Bn` for each first-group size, indexed by `n1`.
fn sd_table(n: usize, v: &VarianceEstimate) -> Result<Vec<f64>> {
    let mut sd = vec![f64::NAN; n + 1];
    for (n1, slot) in sd.iter_mut().enumerate().take(n - 1).skip(2) {
        let var = rescale_var(v, n1)?;
        if var <= 0.0 || !var.is_finite() {
            return Err(Error::DegenerateVariance(var));
        }
        *slot = var.sqrt();
    }
    Ok(sd)
}

fn check_estimate(d: &DissimilarityMatrix, v: &VarianceEstimate) -> Result<()> {
    if v.n != d.n() {
        return Err(Error::Domain(format!(
            "variance estimate for n = {} used with a matrix of size {}",
            v.n,
            d.n()
        )));
    }
    Ok(())
}

/// Global maximum of the standardized `Bn` by enumeration.
pub fn exhaustive_optimal_partition(
    d: &DissimilarityMatrix,
    v: &VarianceEstimate,
) -> Result<(Partition, f64)> {
    let n = d.n();
    check_enumerable(n, MAX_EXHAUSTIVE_N)?;
    check_estimate(d, v)?;
    let sd = sd_table(n, v)?;
    let best = (0..1u64 << (n - 1))
        .into_par_iter()
        .filter(|&m| valid_mask(m, n))
        .map(|m| {
            let p = mask_to_partition(m, n);
            (bn(d, &p) / sd[p.n1()], p)
        })
        .reduce_with(pick_best)
        .expect("n >= 4 has at least one configuration");
    let z = standardized_bn(d, &best.1, v)?;
    Ok((best.1, z))
}

/// Running sums for a two-group split, updated in O(n) per move.
struct SplitState<'a> {
    d: &'a DissimilarityMatrix,
    in_s1: Vec<bool>,
    n1: usize,
    total: f64,
    w1: f64,
    w2: f64,
    /// `to_s1[i] = Σ_{j ∈ S1} d(i, j)`
    to_s1: Vec<f64>,
    to_s2: Vec<f64>,
}

impl<'a> SplitState<'a> {
    fn new(d: &'a DissimilarityMatrix, in_s1: Vec<bool>) -> Self {
        let n = d.n();
        let all: Vec<usize> = (0..n).collect();
        let mut st = SplitState {
            d,
            n1: 0,
            total: within_sum(d, &all),
            w1: 0.0,
            w2: 0.0,
            to_s1: vec![0.0; n],
            to_s2: vec![0.0; n],
            in_s1,
        };
        st.refresh();
        st
    }

    /// Recomputes every sum from scratch, discarding rounding drift.
    fn refresh(&mut self) {
        let n = self.d.n();
        self.n1 = self.in_s1.iter().filter(|&&b| b).count();
        self.w1 = 0.0;
        self.w2 = 0.0;
        for i in 0..n {
            let row = self.d.row(i);
            let (mut a, mut b) = (0.0, 0.0);
            for (j, &x) in row.iter().enumerate() {
                if self.in_s1[j] {
                    a += x;
                } else {
                    b += x;
                }
            }
            self.to_s1[i] = a;
            self.to_s2[i] = b;
            if self.in_s1[i] {
                self.w1 += a;
            } else {
                self.w2 += b;
            }
        }
        self.w1 *= 0.5;
        self.w2 *= 0.5;
    }

    fn z(&self, n1: usize, w1: f64, w2: f64, sd: &[f64]) -> f64 {
        let n2 = self.in_s1.len() - n1;
        bn_from_sums(n1, n2, w1, w2, self.total - w1 - w2) / sd[n1]
    }

    fn current_z(&self, sd: &[f64]) -> f64 {
        self.z(self.n1, self.w1, self.w2, sd)
    }

    /// Standardized statistic after moving `i` to the other group, or `None`
    /// if that would leave a group with fewer than two members.
    fn z_if_moved(&self, i: usize, sd: &[f64]) -> Option<f64> {
        let n = self.in_s1.len();
        if self.in_s1[i] {
            (self.n1 > 2).then(|| {
                self.z(
                    self.n1 - 1,
                    self.w1 - self.to_s1[i],
                    self.w2 + self.to_s2[i],
                    sd,
                )
            })
        } else {
            (n - self.n1 > 2).then(|| {
                self.z(
                    self.n1 + 1,
                    self.w1 + self.to_s1[i],
                    self.w2 - self.to_s2[i],
                    sd,
                )
            })
        }
    }

    fn apply_move(&mut self, i: usize) {
        let row = self.d.row(i);
        if self.in_s1[i] {
            self.w1 -= self.to_s1[i];
            self.w2 += self.to_s2[i];
            self.n1 -= 1;
            for (j, &x) in row.iter().enumerate() {
                self.to_s1[j] -= x;
                self.to_s2[j] += x;
            }
        } else {
            self.w1 += self.to_s1[i];
            self.w2 -= self.to_s2[i];
            self.n1 += 1;
            for (j, &x) in row.iter().enumerate() {
                self.to_s1[j] += x;
                self.to_s2[j] -= x;
            }
        }
        self.in_s1[i] = !self.in_s1[i];
    }
}

/// Initial split from two centres: nearest-centre assignment, then topped up
/// so each group has at least two members.
fn initial_split(d: &DissimilarityMatrix, c1: usize, c2: usize) -> Vec<bool> {
    let n = d.n();
    let mut in_s1: Vec<bool> = (0..n)
        .map(|i| i != c2 && (i == c1 || d.get(i, c1) <= d.get(i, c2)))
        .collect();
    let mut n1 = in_s1.iter().filter(|&&b| b).count();
    while n1 < 2 {
        let j = (0..n)
            .filter(|&j| !in_s1[j] && j != c2)
            .min_by(|&a, &b| d.get(a, c1).total_cmp(&d.get(b, c1)))
            .expect("n >= 4");
        in_s1[j] = true;
        n1 += 1;
    }
    while n - n1 < 2 {
        let j = (0..n)
            .filter(|&j| in_s1[j] && j != c1)
            .min_by(|&a, &b| d.get(a, c2).total_cmp(&d.get(b, c2)))
            .expect("n >= 4");
        in_s1[j] = false;
        n1 -= 1;
    }
    in_s1
}

/// Result of one local search.
#[derive(Debug, Clone)]
pub struct SearchTrace {
    pub partition: Partition,
    pub z: f64,
    /// Objective value `-z` after each accepted move, starting with the
    /// initial split.
    pub objective_path: Vec<f64>,
    pub sweeps: usize,
    pub evaluations: usize,
}

/// One run of the clustering search from the given centres.
///
/// Observations are visited in index order and each is placed on the side
/// with the smaller objective `-Bn / sqrt(Var(Bn))`, moving only on strict
/// improvement. The run stops after a sweep with no change.
pub fn local_search(
    d: &DissimilarityMatrix,
    v: &VarianceEstimate,
    c1: usize,
    c2: usize,
) -> Result<SearchTrace> {
    let n = d.n();
    check_enumerable(n, usize::MAX)?;
    check_estimate(d, v)?;
    if c1 == c2 || c1 >= n || c2 >= n {
        return Err(Error::Domain(format!("invalid centres ({c1}, {c2})")));
    }
    let sd = sd_table(n, v)?;
    search_with_table(d, &sd, c1, c2)
}

fn search_with_table(
    d: &DissimilarityMatrix,
    sd: &[f64],
    c1: usize,
    c2: usize,
) -> Result<SearchTrace> {
    let n = d.n();
    let mut st = SplitState::new(d, initial_split(d, c1, c2));
    let mut z = st.current_z(sd);
    let mut path = vec![-z];
    let mut evaluations = 1;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        st.refresh();
        z = st.current_z(sd);
        let mut changed = false;
        for i in 0..n {
            evaluations += 1;
            if let Some(z_moved) = st.z_if_moved(i, sd) {
                if z_moved > z {
                    st.apply_move(i);
                    z = z_moved;
                    path.push(-z);
                    changed = true;
                }
            }
        }
        if !changed || sweeps >= MAX_SWEEPS {
            break;
        }
    }
    let partition = Partition::from_mask(&st.in_s1)?.canonical();
    let z = bn(d, &partition) / sd[partition.n1()];
    Ok(SearchTrace {
        partition,
        z,
        objective_path: path,
        sweeps,
        evaluations,
    })
}

/// Best split found by `restarts` clustering searches from random centres.
///
/// Returns the partition with the largest standardized `Bn`, the value, and
/// the number of objective evaluations performed.
pub fn cluster_optimal_partition(
    d: &DissimilarityMatrix,
    v: &VarianceEstimate,
    restarts: usize,
    seed: u64,
) -> Result<(Partition, f64, usize)> {
    let n = d.n();
    check_enumerable(n, usize::MAX)?;
    check_estimate(d, v)?;
    if restarts == 0 {
        return Err(Error::Domain("at least one restart required".into()));
    }
    let sd = sd_table(n, v)?;
    let runs: Vec<SearchTrace> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, r as u64);
            let c1 = rng.random_range(0..n);
            let mut c2 = rng.random_range(0..n - 1);
            if c2 >= c1 {
                c2 += 1;
            }
            search_with_table(d, &sd, c1, c2)
        })
        .collect::<Result<_>>()?;
    let evaluations = runs.iter().map(|t| t.evaluations).sum();
    let best = runs
        .into_iter()
        .map(|t| (t.z, t.partition))
        .reduce(pick_best)
        .expect("restarts >= 1");
    let z = standardized_bn(d, &best.1, v)?;
    Ok((best.1, z, evaluations))
}

/// Outcome of the max test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxTest {
    pub z_max: f64,
    pub log_gamma: f64,
    /// `Φ(z_max)^γ`
    pub f_max: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
}

/// `ln Φ(z)` without cancellation in either tail.
pub fn log_normal_cdf(z: f64) -> f64 {
    if z < 0.0 {
        (0.5 * erfc(-z / std::f64::consts::SQRT_2)).ln()
    } else {
        (-0.5 * erfc(z / std::f64::consts::SQRT_2)).ln_1p()
    }
}

/// Tests the maximum standardized `Bn` against `Φ(x)^γ`.
///
/// `p = 1 - Φ(z)^γ` is evaluated as `-expm1(γ ln Φ(z))` with `γ ln Φ(z)`
/// formed in log space, so astronomically large `γ` is handled.
pub fn max_test(z_max: f64, n: usize, alpha: f64) -> Result<MaxTest> {
    check_alpha(alpha)?;
    if n < MIN_GROUP_SIZE {
        return Err(Error::Domain(format!("max test needs n >= 4, got {n}")));
    }
    if z_max.is_nan() {
        return Err(Error::Domain("z_max is NaN".into()));
    }
    let log_gamma = log_configuration_count(n);
    let log_phi = log_normal_cdf(z_max);
    let exponent = if log_phi == 0.0 {
        0.0
    } else {
        -(log_gamma + (-log_phi).ln()).exp()
    };
    let p_value = (-exponent.exp_m1()).clamp(0.0, 1.0);
    Ok(MaxTest {
        z_max,
        log_gamma,
        f_max: exponent.exp(),
        p_value,
        alpha,
        reject: p_value < alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogeneityMethod {
    Multiple,
    Bonferroni,
    Max,
}

impl HomogeneityMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            HomogeneityMethod::Multiple => "multiple",
            HomogeneityMethod::Bonferroni => "bonferroni",
            HomogeneityMethod::Max => "max",
        }
    }
}

impl std::str::FromStr for HomogeneityMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiple" => Ok(HomogeneityMethod::Multiple),
            "bonferroni" => Ok(HomogeneityMethod::Bonferroni),
            "max" => Ok(HomogeneityMethod::Max),
            _ => Err(Error::Domain(format!("unknown homogeneity method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityConfig {
    pub method: HomogeneityMethod,
    pub alpha: f64,
    pub seed: u64,
    /// Clustering restarts (max method, squared Euclidean kernel).
    pub restarts: usize,
    /// Bootstrap replicates for variance estimation (max method).
    pub bootstrap: usize,
    /// Permutations per U test (multiple and bonferroni methods).
    pub permutations: usize,
    /// The max method enumerates all configurations up to this `n`.
    pub exhaustive_threshold: usize,
    /// Multiple and bonferroni methods stop at the first rejecting
    /// configuration; `min_p` then covers only the configurations tested.
    pub stop_at_first_rejection: bool,
}

impl Default for HomogeneityConfig {
    fn default() -> Self {
        HomogeneityConfig {
            method: HomogeneityMethod::Max,
            alpha: 0.05,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            bootstrap: DEFAULT_BOOTSTRAP_REPLICATES,
            permutations: crate::separation::DEFAULT_PERMUTATIONS,
            exhaustive_threshold: DEFAULT_EXHAUSTIVE_THRESHOLD,
            stop_at_first_rejection: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityResult {
    pub method: HomogeneityMethod,
    pub kernel: KernelTag,
    pub n: usize,
    pub best_partition: Partition,
    /// Maximum standardized `Bn` (max method).
    pub z_max: Option<f64>,
    /// Smallest per-configuration p-value (multiple and bonferroni methods).
    pub min_p: Option<f64>,
    pub gamma: f64,
    pub log_gamma: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub restarts_used: usize,
    pub configurations_tested: usize,
    pub variance: Option<VarianceEstimate>,
    pub seed: u64,
}

/// Tests whether all observations of `d` form one homogeneous group.
pub fn homogeneity_test(
    d: &DissimilarityMatrix,
    cfg: &HomogeneityConfig,
) -> Result<HomogeneityResult> {
    let n = d.n();
    check_alpha(cfg.alpha)?;
    if n < MIN_GROUP_SIZE {
        return Err(Error::Domain(format!(
            "homogeneity testing needs n >= 4, got {n}"
        )));
    }
    match cfg.method {
        HomogeneityMethod::Multiple | HomogeneityMethod::Bonferroni => multiple_tests(d, cfg),
        HomogeneityMethod::Max => max_method(d, cfg),
    }
}

fn multiple_tests(d: &DissimilarityMatrix, cfg: &HomogeneityConfig) -> Result<HomogeneityResult> {
    let n = d.n();
    let log_gamma = log_configuration_count(n);
    let gamma = configuration_count(n);
    let threshold = match cfg.method {
        HomogeneityMethod::Bonferroni => cfg.alpha / gamma,
        _ => cfg.alpha,
    };
    let configs: Vec<Partition> = enumerate_configurations(n)?.collect();

    // Chunks are evaluated in parallel and scanned in order, so the first
    // rejection (and everything reported) is independent of scheduling.
    const CHUNK: usize = 64;
    let mut best: Option<(f64, f64, usize)> = None; // (p, bn, index)
    let mut tested = 0;
    'outer: for (c, chunk) in configs.chunks(CHUNK).enumerate() {
        let results: Vec<(f64, f64)> = chunk
            .par_iter()
            .enumerate()
            .map(|(k, p)| {
                let idx = c * CHUNK + k;
                let t = u_test(
                    d,
                    p,
                    cfg.permutations,
                    rng::child_seed(cfg.seed, idx as u64),
                    cfg.alpha,
                )?;
                Ok((t.p_value, t.statistic))
            })
            .collect::<Result<_>>()?;
        for (k, (p, stat)) in results.into_iter().enumerate() {
            tested += 1;
            let idx = c * CHUNK + k;
            if best.is_none_or(|(bp, bs, _)| p < bp || (p == bp && stat > bs)) {
                best = Some((p, stat, idx));
            }
            if cfg.stop_at_first_rejection && p < threshold {
                break 'outer;
            }
        }
    }
    let (min_p, _, idx) = best.expect("at least one configuration");
    let (p_value, reject) = match cfg.method {
        HomogeneityMethod::Bonferroni => ((min_p * gamma).min(1.0), min_p < threshold),
        _ => (min_p, min_p < threshold),
    };
    Ok(HomogeneityResult {
        method: cfg.method,
        kernel: d.kernel(),
        n,
        best_partition: configs[idx].clone(),
        z_max: None,
        min_p: Some(min_p),
        gamma,
        log_gamma,
        p_value,
        alpha: cfg.alpha,
        reject,
        restarts_used: 0,
        configurations_tested: tested,
        variance: None,
        seed: cfg.seed,
    })
}

fn max_method(d: &DissimilarityMatrix, cfg: &HomogeneityConfig) -> Result<HomogeneityResult> {
    let n = d.n();
    let (partition, z, restarts_used, evaluations, variance) = if d.kernel()
        == KernelTag::SqEuclidean
    {
        let v = bootstrap_var_bn(d, cfg.bootstrap, rng::child_seed(cfg.seed, 1))?;
        if n <= cfg.exhaustive_threshold.min(MAX_EXHAUSTIVE_N) {
            let (p, z) = exhaustive_optimal_partition(d, &v)?;
            (p, z, 0, configuration_count(n) as usize, Some(v))
        } else {
            let (p, z, evals) =
                cluster_optimal_partition(d, &v, cfg.restarts, rng::child_seed(cfg.seed, 2))?;
            (p, z, cfg.restarts, evals, Some(v))
        }
    } else {
        let (p, z, count) = per_configuration_max(d, cfg.bootstrap, rng::child_seed(cfg.seed, 3))?;
        (p, z, 0, count, None)
    };
    let mt = max_test(z, n, cfg.alpha)?;
    Ok(HomogeneityResult {
        method: HomogeneityMethod::Max,
        kernel: d.kernel(),
        n,
        best_partition: partition,
        z_max: Some(z),
        min_p: None,
        gamma: configuration_count(n),
        log_gamma: mt.log_gamma,
        p_value: mt.p_value,
        alpha: cfg.alpha,
        reject: mt.reject,
        restarts_used,
        configurations_tested: evaluations,
        variance,
        seed: cfg.seed,
    })
}

/// Maximum standardized `Bn` with a separate bootstrap variance for every
/// configuration, for kernels whose `Var(Bn)` is not split-invariant.
pub fn per_configuration_max(
    d: &DissimilarityMatrix,
    replicates: usize,
    seed: u64,
) -> Result<(Partition, f64, usize)> {
    let n = d.n();
    check_enumerable(n, MAX_PER_CONFIGURATION_N)?;
    let configs: Vec<(u64, Partition)> = (0..1u64 << (n - 1))
        .filter(|&m| valid_mask(m, n))
        .map(|m| (m, mask_to_partition(m, n)))
        .collect();
    let count = configs.len();
    let best = configs
        .into_par_iter()
        .map(|(m, p)| {
            let var = configuration_bootstrap_var(d, &p, replicates, rng::child_seed(seed, m))?;
            if var <= 0.0 {
                return Err(Error::DegenerateVariance(var));
            }
            Ok((bn(d, &p) / var.sqrt(), p))
        })
        .try_reduce_with(|a, b| Ok(pick_best(a, b)))
        .expect("n >= 4 has at least one configuration")?;
    Ok((best.1, best.0, count))
}

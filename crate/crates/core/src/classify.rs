//! Classification of a new observation into one of two separated groups.
//!
//! `D = B1 - B2`, where `B1` is `Bn` with the new observation `x*` added to the
//! first group and `B2` with it added to the second. A positive `D` favours the
//! first group. The test of `H0: E[D] <= 0` bootstraps each group separately
//! (with `x*` held fixed) and rejects when fewer than a fraction `α` of the
//! bootstrap values `D*` are at most zero.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{build_matrix, DissimilarityMatrix, Kernel, Sample, SampleSet};
use crate::rng;
use crate::separation::{add_one_p, check_alpha};
use crate::ustat::bn_multiset;

pub const MIN_CLASSIFICATION_REPLICATES: usize = 199;
pub const CENTROID_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub d_observed: f64,
    pub p_value: f64,
    pub replicates: usize,
    /// Index, among the groups supplied, of the group `x*` is assigned to.
    pub assigned_group: Option<usize>,
    /// The two groups compared, first-group candidate first.
    pub compared: [usize; 2],
    pub alpha: f64,
    pub seed: u64,
    pub reject: bool,
    /// Set when the comparison was chosen by the centroid pre-selection.
    pub heuristic: bool,
}

fn check_groups(d: &DissimilarityMatrix, s1: &[usize], s2: &[usize], star: usize) -> Result<()> {
    let n = d.n();
    if s1.len() < 2 || s2.len() < 2 {
        return Err(Error::DegenerateGroup {
            size: s1.len().min(s2.len()),
        });
    }
    if star >= n {
        return Err(Error::Domain(format!(
            "x* index {star} out of range for size {n}"
        )));
    }
    if s1.iter().chain(s2).any(|&i| i == star) {
        return Err(Error::Domain(format!(
            "x* index {star} also appears in a group"
        )));
    }
    if let Some(&i) = s1.iter().chain(s2).find(|&&i| i >= n) {
        return Err(Error::InvalidPartition(format!(
            "index {i} out of range for size {n}"
        )));
    }
    Ok(())
}

fn d_unchecked(
    d: &DissimilarityMatrix,
    s1: &[usize],
    s2: &[usize],
    star: usize,
    buf: &mut Vec<usize>,
) -> f64 {
    buf.clear();
    buf.extend_from_slice(s1);
    buf.push(star);
    let b1 = bn_multiset(d, buf, s2);
    buf.clear();
    buf.extend_from_slice(s2);
    buf.push(star);
    let b2 = bn_multiset(d, s1, buf);
    b1 - b2
}

/// `D = Bn(s1 ∪ {star}, s2) - Bn(s1, s2 ∪ {star})`.
///
/// Groups may contain repeated indices (bootstrap resamples).
pub fn d_statistic(
    d_aug: &DissimilarityMatrix,
    s1: &[usize],
    s2: &[usize],
    star: usize,
) -> Result<f64> {
    check_groups(d_aug, s1, s2, star)?;
    Ok(d_unchecked(d_aug, s1, s2, star, &mut Vec::new()))
}

/// Bootstrap classification test on a precomputed matrix that covers both
/// groups and `x*`.
pub fn classification_test_matrix(
    d_aug: &DissimilarityMatrix,
    s1: &[usize],
    s2: &[usize],
    star: usize,
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<ClassificationResult> {
    check_alpha(alpha)?;
    check_groups(d_aug, s1, s2, star)?;
    if replicates < MIN_CLASSIFICATION_REPLICATES {
        return Err(Error::Domain(format!(
            "at least {MIN_CLASSIFICATION_REPLICATES} bootstrap replicates required, got {replicates}"
        )));
    }
    let d_observed = d_unchecked(d_aug, s1, s2, star, &mut Vec::new());
    let at_most_zero: usize = (0..replicates)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new(), Vec::new()),
            |(g1, g2, buf), r| {
                let mut rng = rng::stream(seed, r as u64);
                g1.clear();
                g1.extend((0..s1.len()).map(|_| s1[rng.random_range(0..s1.len())]));
                g2.clear();
                g2.extend((0..s2.len()).map(|_| s2[rng.random_range(0..s2.len())]));
                usize::from(d_unchecked(d_aug, g1, g2, star, buf) <= 0.0)
            },
        )
        .sum();
    let p_value = add_one_p(at_most_zero, replicates);
    let reject = p_value < alpha;
    Ok(ClassificationResult {
        d_observed,
        p_value,
        replicates,
        assigned_group: reject.then_some(0),
        compared: [0, 1],
        alpha,
        seed,
        reject,
        heuristic: false,
    })
}

/// Tests whether `x_star` belongs to `g1` rather than `g2`.
pub fn classification_test(
    g1: &SampleSet,
    g2: &SampleSet,
    x_star: &Sample,
    kernel: &Kernel,
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<ClassificationResult> {
    let (n1, n2) = (g1.len(), g2.len());
    let mut all: Vec<Sample> = g1.samples().to_vec();
    all.extend_from_slice(g2.samples());
    all.push(x_star.clone());
    let d = build_matrix(&SampleSet::new(all)?, kernel)?;
    let s1: Vec<usize> = (0..n1).collect();
    let s2: Vec<usize> = (n1..n1 + n2).collect();
    classification_test_matrix(&d, &s1, &s2, n1 + n2, replicates, alpha, seed)
}

fn centroid(set: &SampleSet) -> Result<Vec<f64>> {
    let rows = set.numeric_rows().ok_or_else(|| Error::Unsupported {
        kernel: "centroid".into(),
        reason: "centroids need numeric samples".into(),
    })?;
    let mut c = vec![0.0; set.width()];
    for r in &rows {
        for (a, b) in c.iter_mut().zip(*r) {
            *a += b;
        }
    }
    let m = rows.len() as f64;
    c.iter_mut().for_each(|a| *a /= m);
    Ok(c)
}

/// Classifies `x_star` among several groups by first choosing the two groups
/// whose centroids are nearest to it, then running the two-group test with
/// the nearest as the first group.
///
/// This is a heuristic: its error rates are not controlled across groups.
pub fn centroid_multiway_classify(
    groups: &[SampleSet],
    x_star: &Sample,
    kernel: &Kernel,
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<ClassificationResult> {
    if groups.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::DegenerateGroup { size: g.len() });
    }
    let x = x_star.as_numeric().ok_or_else(|| Error::Unsupported {
        kernel: "centroid".into(),
        reason: "x* must be numeric".into(),
    })?;
    let mut dist: Vec<(f64, usize)> = groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let c = centroid(g)?;
            if c.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: c.len(),
                    found: x.len(),
                });
            }
            Ok((crate::kernels::euclidean(&c, x)?, k))
        })
        .collect::<Result<_>>()?;
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // The first two ranks must be unambiguous: rank 0 decides which group is
    // tested as the first group, rank 1 which group it is tested against.
    for rank in 0..2.min(dist.len() - 1) {
        let edge = dist[rank].0;
        if dist[rank + 1].0 - edge <= CENTROID_TIE_TOLERANCE {
            let mut tied: Vec<usize> = dist
                .iter()
                .filter(|(v, _)| (v - edge).abs() <= CENTROID_TIE_TOLERANCE)
                .map(|&(_, k)| k)
                .collect();
            tied.sort_unstable();
            return Err(Error::AmbiguousCentroid(tied));
        }
    }
    let (first, second) = (dist[0].1, dist[1].1);
    let r = classification_test(
        &groups[first],
        &groups[second],
        x_star,
        kernel,
        replicates,
        alpha,
        seed,
    )?;
    Ok(ClassificationResult {
        assigned_group: r.reject.then_some(first),
        compared: [first, second],
        heuristic: true,
        ..r
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::build_matrix;
    use rand_distr::{Distribution, StandardNormal};

    fn line(points: &[f64]) -> DissimilarityMatrix {
        let set = SampleSet::from_rows(points.iter().map(|&x| vec![x]).collect()).unwrap();
        build_matrix(&set, &Kernel::SqEuclidean).unwrap()
    }

    fn blob(n: usize, l: usize, mu: f64, seed: u64, prefix: &str) -> SampleSet {
        let mut rng = rng::stream(seed, 0);
        SampleSet::new(
            (0..n)
                .map(|i| {
                    let v = (0..l)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            mu + z
                        })
                        .collect();
                    Sample::numeric(format!("{prefix}{i}"), v)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn hand_computed_d() {
        let d = line(&[0.0, 0.0, 10.0, 10.0, 0.0]);
        let v = d_statistic(&d, &[0, 1], &[2, 3], 4).unwrap();
        assert!((v - 40.0).abs() < 1e-12, "{v}");
        let mirrored = line(&[0.0, 0.0, 10.0, 10.0, 10.0]);
        assert!((d_statistic(&mirrored, &[0, 1], &[2, 3], 4).unwrap() + 40.0).abs() < 1e-12);
        let sym = line(&[1.0, 3.0, 1.0, 3.0, 7.5]);
        assert_eq!(d_statistic(&sym, &[0, 1], &[2, 3], 4).unwrap(), 0.0);
    }

    #[test]
    fn swap_negates_exactly() {
        let d = line(&[0.3, 1.7, -2.0, 4.1, 5.5, 0.9, 2.2]);
        let a = d_statistic(&d, &[0, 1, 5], &[2, 3, 4], 6).unwrap();
        let b = d_statistic(&d, &[2, 3, 4], &[0, 1, 5], 6).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn invalid_star_is_rejected() {
        let d = line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(d_statistic(&d, &[0, 1], &[2, 3], 3).is_err());
        assert!(d_statistic(&d, &[0, 1], &[2, 3], 5).is_err());
        assert!(d_statistic(&d, &[0], &[2, 3], 4).is_err());
    }

    #[test]
    fn far_groups_classify_correctly() {
        let g1 = blob(10, 20, 0.0, 1, "a");
        let g2 = blob(10, 20, 5.0, 2, "b");
        let x = blob(1, 20, 0.0, 3, "x").into_samples().remove(0);
        let r = classification_test(&g1, &g2, &x, &Kernel::SqEuclidean, 499, 0.05, 11).unwrap();
        assert!(r.reject, "{r:?}");
        assert_eq!(r.assigned_group, Some(0));
        let copy = g2.get(3).clone();
        let r = classification_test(&g1, &g2, &copy, &Kernel::SqEuclidean, 499, 0.05, 11).unwrap();
        assert!(!r.reject);
        assert!(r.p_value > 0.5);
        assert_eq!(r.assigned_group, None);
        let again =
            classification_test(&g1, &g2, &copy, &Kernel::SqEuclidean, 499, 0.05, 11).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn multiway_picks_nearest_blob() {
        let groups: Vec<SampleSet> = (0..3)
            .map(|k| blob(8, 10, 6.0 * k as f64, 20 + k as u64, "g"))
            .collect();
        let x = blob(1, 10, 6.0, 99, "x").into_samples().remove(0);
        let r =
            centroid_multiway_classify(&groups, &x, &Kernel::SqEuclidean, 299, 0.05, 5).unwrap();
        assert!(r.heuristic);
        assert_eq!(r.compared[0], 1);
        assert_eq!(r.assigned_group, Some(1));
    }

    #[test]
    fn equidistant_centroids_are_ambiguous() {
        let g = |a: f64| SampleSet::from_rows(vec![vec![a - 1.0], vec![a + 1.0]]).unwrap();
        let groups = vec![g(-5.0), g(5.0), g(40.0)];
        let x = Sample::numeric("x", vec![0.0]);
        match centroid_multiway_classify(&groups, &x, &Kernel::SqEuclidean, 199, 0.05, 1) {
            Err(Error::AmbiguousCentroid(t)) => assert_eq!(t, vec![0, 1]),
            other => panic!("{other:?}"),
        }
    }
}

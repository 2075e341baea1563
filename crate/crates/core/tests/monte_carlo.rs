//! Statistical behaviour checked by simulation at fixed seeds.

use uclust_core::kernels::{build_matrix, Kernel, Sample, SampleSet};
use uclust_core::simulate::gaussian_groups;
use uclust_core::{
    bn, centroid_multiway_classify, classification_test, classification_test_matrix, u_test,
    Partition,
};

fn halves(n1: usize, n2: usize) -> Partition {
    Partition::new((0..n1).collect(), (n1..n1 + n2).collect(), n1 + n2).unwrap()
}

#[test]
fn bn_has_zero_mean_under_the_null() {
    let p = halves(5, 5);
    let vals: Vec<f64> = (0..2000)
        .map(|s| {
            let d = build_matrix(
                &gaussian_groups(10, 0, 20, 0.0, s).unwrap(),
                &Kernel::SqEuclidean,
            )
            .unwrap();
            bn(&d, &p)
        })
        .collect();
    let m = vals.iter().sum::<f64>() / vals.len() as f64;
    let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
    assert!(
        m.abs() <= 4.0 * sd / (vals.len() as f64).sqrt(),
        "mean {m}, sd {sd}"
    );
}

#[test]
fn bn_is_positive_under_separation() {
    let p = halves(10, 10);
    let positive = (0..500)
        .filter(|&s| {
            let d = build_matrix(
                &gaussian_groups(10, 10, 20, 1.0, 10_000 + s).unwrap(),
                &Kernel::SqEuclidean,
            )
            .unwrap();
            bn(&d, &p) > 0.0
        })
        .count();
    assert!(positive >= 495, "{positive}");
}

fn rejection_rate(mu2: f64, seed0: u64) -> f64 {
    let p = halves(10, 10);
    let hits = (0..500)
        .filter(|&s| {
            let data = gaussian_groups(10, 10, 50, mu2, seed0 + s).unwrap();
            let d = build_matrix(&data, &Kernel::SqEuclidean).unwrap();
            u_test(&d, &p, 199, s, 0.05).unwrap().reject
        })
        .count();
    hits as f64 / 500.0
}

#[test]
fn u_test_size_and_power() {
    let size = rejection_rate(0.0, 0);
    assert!((0.03..=0.08).contains(&size), "size {size}");
    let power = rejection_rate(1.0 / 50f64.sqrt(), 50_000);
    assert!(power > size, "power {power} vs size {size}");
}

#[test]
fn classification_is_conservative_under_a_symmetric_null() {
    let mut hits = 0;
    for s in 0..500 {
        let data = gaussian_groups(21, 0, 20, 0.0, 70_000 + s).unwrap();
        let d = build_matrix(&data, &Kernel::SqEuclidean).unwrap();
        let s1: Vec<usize> = (0..10).collect();
        let s2: Vec<usize> = (10..20).collect();
        hits += usize::from(
            classification_test_matrix(&d, &s1, &s2, 20, 199, 0.05, s)
                .unwrap()
                .reject,
        );
    }
    assert!(hits as f64 / 500.0 <= 0.10, "{hits}/500");
}

fn shifted(n: usize, l: usize, mu: &[f64], seed: u64, prefix: &str) -> SampleSet {
    let base = gaussian_groups(n, 0, l, 0.0, seed).unwrap();
    SampleSet::new(
        base.into_samples()
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let v = s
                    .as_numeric()
                    .unwrap()
                    .iter()
                    .zip(mu.iter().cycle())
                    .map(|(a, b)| a + b)
                    .collect();
                Sample::numeric(format!("{prefix}{i}"), v)
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn gaussian_classification_example() {
    let g1 = shifted(10, 20, &[0.0], 1, "a");
    let g2 = shifted(10, 20, &[5.0], 2, "b");
    let mut rejected = 0;
    for s in 0..20 {
        let x = shifted(1, 20, &[0.0], 100 + s, "x")
            .into_samples()
            .remove(0);
        rejected += usize::from(
            classification_test(&g1, &g2, &x, &Kernel::SqEuclidean, 499, 0.05, s)
                .unwrap()
                .reject,
        );
    }
    assert!(rejected >= 19, "{rejected}/20");
}

#[test]
fn multiway_assigns_to_the_seeded_group() {
    // five groups of seed sizes 10..27 on well separated means
    let sizes = [10, 14, 19, 23, 27];
    let mut assigned = 0;
    for draw in 0..20u64 {
        let groups: Vec<SampleSet> = sizes
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let mu: Vec<f64> = (0..8).map(|c| if c == k { 6.0 } else { 0.0 }).collect();
                shifted(n, 8, &mu, 1000 * draw + k as u64, "g")
            })
            .collect();
        let target = (draw % 5) as usize;
        let mu: Vec<f64> = (0..8)
            .map(|c| if c == target { 6.0 } else { 0.0 })
            .collect();
        let x = shifted(1, 8, &mu, 9_999 + draw, "x")
            .into_samples()
            .remove(0);
        let r =
            centroid_multiway_classify(&groups, &x, &Kernel::SqEuclidean, 299, 0.05, draw).unwrap();
        assert!(r.heuristic);
        assert_eq!(r.compared[0], target);
        assigned += usize::from(r.assigned_group == Some(target));
    }
    assert!(assigned >= 15, "{assigned}/20");
}

use proptest::prelude::*;

use uclust_core::homogeneity::{
    cluster_optimal_partition, enumerate_configurations, exhaustive_optimal_partition,
    local_search, max_test,
};
use uclust_core::kernels::{build_matrix, hky_distance, BaseFreqs, Kernel, SampleSet};
use uclust_core::ustat::{bn_multiset, psi2_form_bn, un_decomposition};
use uclust_core::variance::{c_coefficient, rescale_var, standardized_bn, VarianceEstimate};
use uclust_core::{bn, d_statistic, DissimilarityMatrix, Partition};

fn dataset() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (4usize..=16, 1usize..=6)
        .prop_flat_map(|(n, l)| prop::collection::vec(prop::collection::vec(-10.0f64..10.0, l), n))
}

fn matrix(rows: &[Vec<f64>]) -> DissimilarityMatrix {
    build_matrix(
        &SampleSet::from_rows(rows.to_vec()).unwrap(),
        &Kernel::SqEuclidean,
    )
    .unwrap()
}

fn split(mask: u64, n: usize) -> Option<Partition> {
    let in_s1: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
    Partition::from_mask(&in_s1).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn decomposition_identity(rows in dataset(), mask in any::<u64>()) {
        let d = matrix(&rows);
        if let Some(p) = split(mask, rows.len()) {
            let dec = un_decomposition(&d, &p);
            prop_assert!((dec.u_n - dec.w_n - dec.b_n).abs() <= 1e-10 * dec.u_n.abs().max(1.0));
            prop_assert_eq!(dec.b_n.to_bits(), bn(&d, &p).to_bits());
        }
    }

    #[test]
    fn psi2_identity_any_center(rows in dataset(), mask in any::<u64>(), shift in -20.0f64..20.0) {
        let d = matrix(&rows);
        if let Some(p) = split(mask, rows.len()) {
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let center: Vec<f64> = (0..rows[0].len()).map(|k| shift * (k as f64 + 1.0).sin()).collect();
            let b = bn(&d, &p);
            let via_psi = psi2_form_bn(&refs, &center, &p).unwrap();
            prop_assert!((via_psi - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn label_swap_is_exact(rows in dataset(), mask in any::<u64>()) {
        let d = matrix(&rows);
        if let Some(p) = split(mask, rows.len()) {
            prop_assert_eq!(bn(&d, &p).to_bits(), bn(&d, &p.swapped()).to_bits());
        }
    }

    #[test]
    fn bn_ignores_order_within_groups(rows in dataset(), mask in any::<u64>()) {
        let d = matrix(&rows);
        if let Some(p) = split(mask, rows.len()) {
            let mut s1 = p.s1().to_vec();
            let mut s2 = p.s2().to_vec();
            s1.reverse();
            s2.rotate_left(1);
            prop_assert!((bn_multiset(&d, &s1, &s2) - bn(&d, &p)).abs() <= 1e-9 * (1.0 + bn(&d, &p).abs()));
        }
    }

    #[test]
    fn d_swap_negates(rows in dataset(), mask in any::<u64>()) {
        let n = rows.len();
        let d = matrix(&rows);
        let star = n - 1;
        if let Some(p) = split(mask & ((1 << star) - 1), star) {
            let a = d_statistic(&d, p.s1(), p.s2(), star).unwrap();
            let b = d_statistic(&d, p.s2(), p.s1(), star).unwrap();
            prop_assert_eq!(a, -b);
        }
    }

    #[test]
    fn c_is_symmetric(n in 4usize..=100, frac in 0.0f64..1.0) {
        let n1 = 2 + ((n - 4) as f64 * frac) as usize;
        let a = c_coefficient(n, n1).unwrap();
        let b = c_coefficient(n, n - n1).unwrap();
        prop_assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn rescale_round_trip(n in 4usize..=60, var in 0.01f64..100.0, fi in 0.0f64..1.0, fj in 0.0f64..1.0) {
        let i = 2 + ((n - 4) as f64 * fi) as usize;
        let j = 2 + ((n - 4) as f64 * fj) as usize;
        let base = VarianceEstimate { ref_n1: i, var_at_ref: var, ..VarianceEstimate::closed_form(n, 1.0).unwrap() };
        let moved = VarianceEstimate { ref_n1: j, var_at_ref: rescale_var(&base, j).unwrap(), ..base };
        prop_assert!((rescale_var(&moved, i).unwrap() - var).abs() <= 1e-12 * var);
    }

    #[test]
    fn standardized_is_swap_symmetric(rows in dataset(), mask in any::<u64>()) {
        let d = matrix(&rows);
        let v = VarianceEstimate::closed_form(rows.len(), 3.0).unwrap();
        if let Some(p) = split(mask, rows.len()) {
            prop_assert_eq!(standardized_bn(&d, &p, &v).unwrap(), standardized_bn(&d, &p.swapped(), &v).unwrap());
        }
    }

    #[test]
    fn exhaustive_dominates_random_splits(rows in dataset(), masks in prop::collection::vec(any::<u64>(), 50)) {
        let n = rows.len();
        let d = matrix(&rows);
        let v = VarianceEstimate::closed_form(n, 2.0).unwrap();
        let (_, z) = exhaustive_optimal_partition(&d, &v).unwrap();
        for m in masks {
            if let Some(p) = split(m, n) {
                prop_assert!(z >= standardized_bn(&d, &p, &v).unwrap() - 1e-12);
            }
        }
    }

    #[test]
    fn search_respects_size_and_descends(rows in dataset(), seed in any::<u64>()) {
        let n = rows.len();
        let d = matrix(&rows);
        let v = VarianceEstimate::closed_form(n, 1.0).unwrap();
        let (p, z, _) = cluster_optimal_partition(&d, &v, 5, seed).unwrap();
        prop_assert!(p.n1() >= 2 && p.n2() >= 2);
        prop_assert_eq!(p.s1()[0], 0);
        prop_assert!((z - standardized_bn(&d, &p, &v).unwrap()).abs() <= 1e-12 * (1.0 + z.abs()));
        let t = local_search(&d, &v, seed as usize % n, (seed as usize + 1) % n).unwrap();
        prop_assert!(t.objective_path.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn max_test_monotone(z1 in -5.0f64..12.0, dz in 0.0f64..3.0, n in 4usize..200, dn in 0usize..50) {
        let p = |z: f64, n: usize| max_test(z, n, 0.05).unwrap().p_value;
        prop_assert!(p(z1 + dz, n) <= p(z1, n));
        prop_assert!(p(z1, n + dn) >= p(z1, n));
        prop_assert!((0.0..=1.0).contains(&p(z1, n)));
    }

    #[test]
    fn hky_is_symmetric(pairs in prop::collection::vec((0usize..4, 0usize..4), 200..400)) {
        let b = b"ACGT";
        let x: Vec<u8> = pairs.iter().map(|p| b[p.0]).collect();
        let y: Vec<u8> = pairs.iter().map(|p| if p.0 == p.1 || p.1 == 3 { b[p.0] } else { b[p.1] }).collect();
        let a = hky_distance(&x, &y, BaseFreqs::Empirical);
        let c = hky_distance(&y, &x, BaseFreqs::Empirical);
        match (a, c) {
            (Ok(a), Ok(c)) => prop_assert!((a - c).abs() <= 1e-12),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
    }
}

#[test]
fn enumeration_counts() {
    for n in 4..=12 {
        let count = enumerate_configurations(n).unwrap().count() as u64;
        assert_eq!(count, (1u64 << (n - 1)) - n as u64 - 1);
    }
}

//! Within- and between-group U-statistics and the `Bn` separation statistic.
//!
//! Everything here works from a precomputed [`DissimilarityMatrix`]; kernels
//! are never re-evaluated inside resampling loops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DissimilarityMatrix;

/// Two disjoint groups of observation indices, each with at least two members.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    s1: Vec<usize>,
    s2: Vec<usize>,
}

impl Partition {
    /// Validates a partition of indices into a matrix of size `n`.
    pub fn new(mut s1: Vec<usize>, mut s2: Vec<usize>, n: usize) -> Result<Self> {
        s1.sort_unstable();
        s2.sort_unstable();
        for s in [&s1, &s2] {
            if s.len() < 2 {
                return Err(Error::DegenerateGroup { size: s.len() });
            }
            if let Some(&bad) = s.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidPartition(format!(
                    "index {bad} out of range for n = {n}"
                )));
            }
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidPartition(
                    "repeated index within a group".into(),
                ));
            }
        }
        if let Some(i) = s1.iter().find(|i| s2.binary_search(i).is_ok()) {
            return Err(Error::InvalidPartition(format!(
                "index {i} appears in both groups"
            )));
        }
        Ok(Partition { s1, s2 })
    }

    /// Partition of `0..n` given a membership mask (`true` = first group).
    pub fn from_mask(in_s1: &[bool]) -> Result<Self> {
        let (s1, s2): (Vec<usize>, Vec<usize>) = (0..in_s1.len()).partition(|&i| in_s1[i]);
        Partition::new(s1, s2, in_s1.len())
    }

    pub fn s1(&self) -> &[usize] {
        &self.s1
    }

    pub fn s2(&self) -> &[usize] {
        &self.s2
    }

    pub fn n1(&self) -> usize {
        self.s1.len()
    }

    pub fn n2(&self) -> usize {
        self.s2.len()
    }

    pub fn n(&self) -> usize {
        self.s1.len() + self.s2.len()
    }

    pub fn swapped(&self) -> Partition {
        Partition {
            s1: self.s2.clone(),
            s2: self.s1.clone(),
        }
    }

    /// Orients the partition so the first group holds the smallest index.
    pub fn canonical(self) -> Partition {
        if self.s2.first() < self.s1.first() {
            self.swapped()
        } else {
            self
        }
    }
}

/// `U_n = W_n + B_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub u_n: f64,
    pub w_n: f64,
    pub b_n: f64,
}

/// Sum over unordered pairs of positions in `s`. Repeated indices count as
/// distinct observations at distance zero.
#[inline]
pub(crate) fn within_sum(d: &DissimilarityMatrix, s: &[usize]) -> f64 {
    let mut total = 0.0;
    for (a, &i) in s.iter().enumerate() {
        let row = d.row(i);
        for &j in &s[a + 1..] {
            total += row[j];
        }
    }
    total
}

#[inline]
pub(crate) fn between_sum(d: &DissimilarityMatrix, s1: &[usize], s2: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in s1 {
        let row = d.row(i);
        for &j in s2 {
            total += row[j];
        }
    }
    total
}

/// `Bn` from the three raw pair sums and the group sizes.
#[inline]
pub(crate) fn bn_from_sums(n1: usize, n2: usize, w1: f64, w2: f64, b12: f64) -> f64 {
    let (f1, f2) = (n1 as f64, n2 as f64);
    let n = f1 + f2;
    let u1 = 2.0 * w1 / (f1 * (f1 - 1.0));
    let u2 = 2.0 * w2 / (f2 * (f2 - 1.0));
    let u12 = b12 / (f1 * f2);
    f1 * f2 / (n * (n - 1.0)) * (2.0 * u12 - (u1 + u2))
}

/// Mean dissimilarity over all unordered pairs within `s`.
pub fn within_group_u(d: &DissimilarityMatrix, s: &[usize]) -> Result<f64> {
    let m = s.len();
    if m < 2 {
        return Err(Error::DegenerateGroup { size: m });
    }
    Ok(2.0 * within_sum(d, s) / (m * (m - 1)) as f64)
}

/// Mean dissimilarity over all cross pairs of two disjoint groups.
pub fn between_group_u(d: &DissimilarityMatrix, s1: &[usize], s2: &[usize]) -> Result<f64> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::DegenerateGroup { size: 0 });
    }
    if let Some(i) = s1.iter().find(|i| s2.contains(i)) {
        return Err(Error::InvalidPartition(format!(
            "index {i} appears in both groups"
        )));
    }
    Ok(between_sum(d, s1, s2) / (s1.len() * s2.len()) as f64)
}

/// The separation statistic `Bn = n1 n2 / (n (n-1)) (2 U12 - U1 - U2)`.
pub fn bn(d: &DissimilarityMatrix, p: &Partition) -> f64 {
    bn_multiset(d, p.s1(), p.s2())
}

/// `Bn` for groups given as index lists that may contain repeats, as produced
/// by bootstrap resampling. Both lists must have length at least 2.
pub fn bn_multiset(d: &DissimilarityMatrix, s1: &[usize], s2: &[usize]) -> f64 {
    debug_assert!(s1.len() >= 2 && s2.len() >= 2);
    // fixed group order keeps the summation order, and so the result,
    // independent of labelling
    let (s1, s2) = if s2 < s1 { (s2, s1) } else { (s1, s2) };
    bn_from_sums(
        s1.len(),
        s2.len(),
        within_sum(d, s1),
        within_sum(d, s2),
        between_sum(d, s1, s2),
    )
}

/// Splits the pooled U-statistic over `S1 ∪ S2` into within (`W_n`) and
/// between (`B_n`) parts.
pub fn un_decomposition(d: &DissimilarityMatrix, p: &Partition) -> Decomposition {
    let (n1, n2) = (p.n1() as f64, p.n2() as f64);
    let n = n1 + n2;
    let w1 = within_sum(d, p.s1());
    let w2 = within_sum(d, p.s2());
    let b12 = between_sum(d, p.s1(), p.s2());
    let u_n = 2.0 * (w1 + w2 + b12) / (n * (n - 1.0));
    let u1 = 2.0 * w1 / (n1 * (n1 - 1.0));
    let u2 = 2.0 * w2 / (n2 * (n2 - 1.0));
    Decomposition {
        u_n,
        w_n: n1 / n * u1 + n2 / n * u2,
        b_n: bn(d, p),
    }
}

/// `Bn` written through the degenerate kernel `ψ2(x, y) = -2 (x-c)'(y-c)`.
///
/// For the squared Euclidean kernel this equals [`bn`] for every centre `c`;
/// it is an independent algebraic route used to check the main path.
pub fn psi2_form_bn(rows: &[&[f64]], center: &[f64], p: &Partition) -> Result<f64> {
    let l = center.len();
    for r in rows {
        if r.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                found: r.len(),
            });
        }
    }
    let centred: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(center).map(|(x, c)| x - c).collect())
        .collect();
    let psi2 = |i: usize, j: usize| -> f64 {
        -2.0 * centred[i]
            .iter()
            .zip(&centred[j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
    };
    let pair_sum = |s: &[usize]| -> f64 {
        let mut t = 0.0;
        for (a, &i) in s.iter().enumerate() {
            for &j in &s[a + 1..] {
                t += psi2(i, j);
            }
        }
        t
    };
    let cross: f64 = p
        .s1()
        .iter()
        .flat_map(|&i| p.s2().iter().map(move |&j| (i, j)))
        .map(|(i, j)| psi2(i, j))
        .sum();
    let (n1, n2) = (p.n1() as f64, p.n2() as f64);
    let n = n1 + n2;
    Ok(n1 * n2 / (n * (n - 1.0))
        * (2.0 / (n1 * n2) * cross
            - 2.0 / (n1 * (n1 - 1.0)) * pair_sum(p.s1())
            - 2.0 / (n2 * (n2 - 1.0)) * pair_sum(p.s2())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_matrix, Kernel, SampleSet};

    fn line(points: &[f64]) -> DissimilarityMatrix {
        let set = SampleSet::from_rows(points.iter().map(|&x| vec![x]).collect()).unwrap();
        build_matrix(&set, &Kernel::SqEuclidean).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn within_group_examples() {
        let d = line(&[0.0, 2.0, 4.0, 7.0, 7.0]);
        assert!(close(within_group_u(&d, &[0, 1]).unwrap(), 4.0));
        assert!(close(within_group_u(&d, &[0, 1, 2]).unwrap(), 8.0));
        assert_eq!(within_group_u(&d, &[3, 4]).unwrap(), 0.0);
        assert_eq!(
            within_group_u(&d, &[3]),
            Err(Error::DegenerateGroup { size: 1 })
        );
    }

    #[test]
    fn between_group_examples() {
        // points 0,1,2,3 with groups {0,2} | {1,3}
        let d = line(&[0.0, 1.0, 2.0, 3.0]);
        assert!(close(between_group_u(&d, &[0, 2], &[1, 3]).unwrap(), 3.0));
        let d = line(&[0.0, 0.0, 1.0, 1.0]);
        assert!(close(between_group_u(&d, &[0, 1], &[2, 3]).unwrap(), 1.0));
        assert!(between_group_u(&d, &[0, 1], &[1, 3]).is_err());
        let c = line(&[5.0; 4]);
        assert_eq!(between_group_u(&c, &[0, 1], &[2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn bn_examples() {
        let d = line(&[0.0, 0.0, 1.0, 1.0]);
        let p = Partition::new(vec![0, 1], vec![2, 3], 4).unwrap();
        assert!(close(bn(&d, &p), 2.0 / 3.0));

        let d = line(&[0.0, 1.0, 2.0, 3.0]);
        let p = Partition::new(vec![0, 2], vec![1, 3], 4).unwrap();
        assert!(close(bn(&d, &p), -2.0 / 3.0));

        let d = line(&[4.0; 4]);
        assert_eq!(bn(&d, &p), 0.0);
    }

    #[test]
    fn decomposition_example() {
        let d = line(&[0.0, 1.0, 2.0, 3.0]);
        let p = Partition::new(vec![0, 2], vec![1, 3], 4).unwrap();
        let dec = un_decomposition(&d, &p);
        assert!(close(dec.u_n, 10.0 / 3.0));
        assert!(close(dec.w_n, 4.0));
        assert!(close(dec.b_n, -2.0 / 3.0));
        assert!(close(dec.w_n + dec.b_n, dec.u_n));

        let c = un_decomposition(&line(&[1.0; 4]), &p);
        assert_eq!((c.u_n, c.w_n, c.b_n), (0.0, 0.0, 0.0));
    }

    #[test]
    fn psi2_form_examples() {
        let pts = [[0.0], [1.0], [2.0], [3.0]];
        let rows: Vec<&[f64]> = pts.iter().map(|r| r.as_slice()).collect();
        let p = Partition::new(vec![0, 2], vec![1, 3], 4).unwrap();
        assert!(close(psi2_form_bn(&rows, &[0.0], &p).unwrap(), -2.0 / 3.0));
        assert!(close(psi2_form_bn(&rows, &[1.0], &p).unwrap(), -2.0 / 3.0));
        let flat = [[2.5]; 4];
        let rows: Vec<&[f64]> = flat.iter().map(|r| r.as_slice()).collect();
        assert!(psi2_form_bn(&rows, &[-7.0], &p).unwrap().abs() < 1e-12);
        assert!(matches!(
            psi2_form_bn(&rows, &[0.0, 1.0], &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0], vec![1, 2], 3).is_err());
        assert!(Partition::new(vec![0, 1], vec![1, 2], 3).is_err());
        assert!(Partition::new(vec![0, 5], vec![1, 2], 4).is_err());
        assert!(Partition::new(vec![0, 0], vec![1, 2], 4).is_err());
        let p = Partition::new(vec![3, 1], vec![2, 0], 4)
            .unwrap()
            .canonical();
        assert_eq!(p.s1(), &[0, 2]);
        assert_eq!(p.s2(), &[1, 3]);
        let m = Partition::from_mask(&[true, false, true, false]).unwrap();
        assert_eq!(m.s1(), &[0, 2]);
    }

    #[test]
    fn label_swap_is_exact() {
        let d = line(&[0.3, -1.2, 4.4, 0.9, 2.2, -0.7]);
        let p = Partition::new(vec![0, 2, 5], vec![1, 3, 4], 6).unwrap();
        assert_eq!(bn(&d, &p), bn(&d, &p.swapped()));
    }
}

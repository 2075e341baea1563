//! Dissimilarity kernels and dissimilarity matrices.
//!
//! Numeric samples are compared with the squared Euclidean kernel (the one
//! the closed-form variance of `Bn` is derived for) or plain Euclidean
//! distance. Aligned DNA is compared with the Hamming count/proportion or the
//! HKY evolutionary distance. Matrices computed elsewhere can be loaded as
//! `external` and go through the same structural validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed sequence characters. Only `A`, `C`, `G`, `T` are ever compared.
pub const SEQUENCE_ALPHABET: &[u8] = b"ACGT-N";

/// Asymmetry below this is averaged away when loading external matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Numeric(Vec<f64>),
    /// Upper-case bytes over [`SEQUENCE_ALPHABET`].
    Sequence(Vec<u8>),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::Numeric(v) => v.len(),
            Payload::Sequence(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind(&self) -> &'static str {
        match self {
            Payload::Numeric(_) => "numeric",
            Payload::Sequence(_) => "sequence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub payload: Payload,
}

impl Sample {
    pub fn numeric(id: impl Into<String>, values: Vec<f64>) -> Self {
        Sample {
            id: id.into(),
            payload: Payload::Numeric(values),
        }
    }

    /// Builds a sequence sample, upper-casing the input. Characters outside
    /// the alphabet are rejected.
    pub fn sequence(id: impl Into<String>, seq: &str) -> Result<Self> {
        let id = id.into();
        let bytes: Vec<u8> = seq.bytes().map(|b| b.to_ascii_uppercase()).collect();
        if let Some(pos) = bytes.iter().position(|b| !SEQUENCE_ALPHABET.contains(b)) {
            return Err(Error::InvalidSample(format!(
                "sequence '{id}' has invalid character '{}' at position {}",
                bytes[pos] as char,
                pos + 1
            )));
        }
        Ok(Sample {
            id,
            payload: Payload::Sequence(bytes),
        })
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::Numeric(v) => Some(v),
            Payload::Sequence(_) => None,
        }
    }

    pub fn as_sequence(&self) -> Option<&[u8]> {
        match &self.payload {
            Payload::Sequence(s) => Some(s),
            Payload::Numeric(_) => None,
        }
    }
}

/// A validated collection of samples sharing payload kind and length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Sample>,
}

impl SampleSet {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Ok(SampleSet { samples });
        };
        let len = first.payload.len();
        if len == 0 {
            return Err(Error::InvalidSample(format!(
                "sample '{}' is empty",
                first.id
            )));
        }
        for s in &samples[1..] {
            if s.payload.kind() != first.payload.kind() {
                return Err(Error::InvalidSample(format!(
                    "sample '{}' is {} but '{}' is {}",
                    s.id,
                    s.payload.kind(),
                    first.id,
                    first.payload.kind()
                )));
            }
            if s.payload.len() != len {
                return Err(Error::InvalidSample(format!(
                    "sample '{}' has length {} (expected {len})",
                    s.id,
                    s.payload.len()
                )));
            }
        }
        if let Payload::Numeric(_) = first.payload {
            for s in &samples {
                if s.as_numeric()
                    .is_some_and(|v| v.iter().any(|x| !x.is_finite()))
                {
                    return Err(Error::InvalidSample(format!(
                        "sample '{}' has non-finite values",
                        s.id
                    )));
                }
            }
        }
        Ok(SampleSet { samples })
    }

    /// Convenience constructor for numeric rows with ids `s0, s1, ...`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            rows.into_iter()
                .enumerate()
                .map(|(i, r)| Sample::numeric(format!("s{i}"), r))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature count or alignment length, 0 when empty.
    pub fn width(&self) -> usize {
        self.samples.first().map_or(0, |s| s.payload.len())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn get(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }

    pub fn is_numeric(&self) -> bool {
        self.samples
            .first()
            .is_some_and(|s| matches!(s.payload, Payload::Numeric(_)))
    }

    /// Numeric rows, or `None` for sequence data.
    pub fn numeric_rows(&self) -> Option<Vec<&[f64]>> {
        self.samples.iter().map(|s| s.as_numeric()).collect()
    }

    /// Returns the samples at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> SampleSet {
        SampleSet {
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }
}

/// Base composition used by the HKY distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum BaseFreqs {
    /// Pooled from the two sequences being compared.
    #[default]
    Empirical,
    /// Fixed frequencies of A, C, G, T.
    Fixed([f64; 4]),
}

/// Kernel identity stored alongside a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelTag {
    SqEuclidean,
    Euclidean,
    Hamming,
    Hky,
    External,
}

impl KernelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelTag::SqEuclidean => "sq_euclidean",
            KernelTag::Euclidean => "euclidean",
            KernelTag::Hamming => "hamming",
            KernelTag::Hky => "hky",
            KernelTag::External => "external",
        }
    }
}

impl std::fmt::Display for KernelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A kernel together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    SqEuclidean,
    Euclidean,
    Hamming { normalize: bool },
    Hky { freqs: BaseFreqs },
}

impl Kernel {
    pub fn tag(&self) -> KernelTag {
        match self {
            Kernel::SqEuclidean => KernelTag::SqEuclidean,
            Kernel::Euclidean => KernelTag::Euclidean,
            Kernel::Hamming { .. } => KernelTag::Hamming,
            Kernel::Hky { .. } => KernelTag::Hky,
        }
    }

    pub fn eval(&self, x: &Sample, y: &Sample) -> Result<f64> {
        match (self, &x.payload, &y.payload) {
            (Kernel::SqEuclidean, Payload::Numeric(a), Payload::Numeric(b)) => sq_euclidean(a, b),
            (Kernel::Euclidean, Payload::Numeric(a), Payload::Numeric(b)) => euclidean(a, b),
            (Kernel::Hamming { normalize }, Payload::Sequence(a), Payload::Sequence(b)) => {
                hamming(a, b, *normalize)
            }
            (Kernel::Hky { freqs }, Payload::Sequence(a), Payload::Sequence(b)) => {
                hky_distance(a, b, *freqs)
            }
            _ => Err(Error::Unsupported {
                kernel: self.tag().to_string(),
                reason: format!("cannot compare {} payloads", x.payload.kind()),
            }),
        }
    }
}

/// Squared Euclidean distance `Σ (x_k - y_k)²`.
pub fn sq_euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    sq_euclidean(x, y).map(f64::sqrt)
}

/// Index of a nucleotide in `ACGT` order, `None` for gaps and ambiguity.
#[inline]
pub fn base_index(b: u8) -> Option<usize> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

#[inline]
fn is_transition(a: usize, b: usize) -> bool {
    // A<->G and C<->T differ by 2 in ACGT order
    a != b && (a + b).is_multiple_of(2)
}

/// Mismatch count (or proportion) over sites where both sequences carry a
/// nucleotide. Sites with a gap or `N` in either sequence are skipped.
pub fn hamming(x: &[u8], y: &[u8], normalize: bool) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let mut compared = 0usize;
    let mut mismatches = 0usize;
    for (&a, &b) in x.iter().zip(y) {
        if let (Some(a), Some(b)) = (base_index(a), base_index(b)) {
            compared += 1;
            if a != b {
                mismatches += 1;
            }
        }
    }
    if compared == 0 {
        return Err(Error::UndefinedDistance);
    }
    Ok(if normalize {
        mismatches as f64 / compared as f64
    } else {
        mismatches as f64
    })
}

/// Pairwise site pattern counts used by the HKY estimator.
#[derive(Debug, Clone, Copy, Default)]
struct SiteCounts {
    sites: usize,
    purine_transitions: usize,
    pyrimidine_transitions: usize,
    transversions: usize,
    bases: [usize; 4],
}

fn site_counts(x: &[u8], y: &[u8]) -> SiteCounts {
    let mut c = SiteCounts::default();
    for (&a, &b) in x.iter().zip(y) {
        let (Some(a), Some(b)) = (base_index(a), base_index(b)) else {
            continue;
        };
        c.sites += 1;
        c.bases[a] += 1;
        c.bases[b] += 1;
        if a == b {
            continue;
        }
        if is_transition(a, b) {
            if a % 2 == 0 {
                c.purine_transitions += 1;
            } else {
                c.pyrimidine_transitions += 1;
            }
        } else {
            c.transversions += 1;
        }
    }
    c
}

/// HKY evolutionary distance in expected substitutions per site.
///
/// Uses the closed-form Tamura-Nei estimator, which is consistent under HKY
/// (HKY is the Tamura-Nei model with equal purine and pyrimidine transition
/// rates). Terms whose coefficient vanishes because a base is absent from the
/// composition are dropped.
pub fn hky_distance(x: &[u8], y: &[u8], freqs: BaseFreqs) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let c = site_counts(x, y);
    if c.sites == 0 {
        return Err(Error::UndefinedDistance);
    }
    let sites = c.sites as f64;
    let p1 = c.purine_transitions as f64 / sites;
    let p2 = c.pyrimidine_transitions as f64 / sites;
    let q = c.transversions as f64 / sites;
    let p_distance = p1 + p2 + q;

    let pi = match freqs {
        BaseFreqs::Empirical => {
            let total = 2.0 * sites;
            c.bases.map(|k| k as f64 / total)
        }
        BaseFreqs::Fixed(f) => {
            let s: f64 = f.iter().sum();
            if f.iter().any(|v| !v.is_finite() || *v < 0.0) || s <= 0.0 {
                return Err(Error::Domain(format!("invalid base frequencies {f:?}")));
            }
            f.map(|v| v / s)
        }
    };
    let [pa, pc, pg, pt] = pi;
    let pr = pa + pg;
    let py = pc + pt;

    let saturated = || Error::SaturatedDistance { p_distance };
    let mut d = 0.0;

    // purine transitions
    if pa * pg > 0.0 {
        let k1 = 2.0 * pa * pg / pr;
        let w1 = 1.0 - p1 / k1 - q / (2.0 * pr);
        if w1 <= 0.0 {
            return Err(saturated());
        }
        d -= k1 * w1.ln();
    } else if p1 > 0.0 {
        return Err(saturated());
    }

    // pyrimidine transitions
    if pc * pt > 0.0 {
        let k2 = 2.0 * pc * pt / py;
        let w2 = 1.0 - p2 / k2 - q / (2.0 * py);
        if w2 <= 0.0 {
            return Err(saturated());
        }
        d -= k2 * w2.ln();
    } else if p2 > 0.0 {
        return Err(saturated());
    }

    // transversions
    if pr * py > 0.0 {
        let k3 = 2.0 * (pr * py - pa * pg * py / pr - pc * pt * pr / py);
        let w3 = 1.0 - q / (2.0 * pr * py);
        if w3 <= 0.0 {
            return Err(saturated());
        }
        d -= k3 * w3.ln();
    } else if q > 0.0 {
        return Err(saturated());
    }

    Ok(d.max(0.0))
}

/// Symmetric `n x n` matrix of pairwise dissimilarities with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityMatrix {
    n: usize,
    ids: Vec<String>,
    values: Vec<f64>,
    kernel: KernelTag,
}

impl DissimilarityMatrix {
    /// Builds a matrix by evaluating `f` once per unordered pair.
    pub fn from_pairs<F>(ids: Vec<String>, kernel: KernelTag, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync,
    {
        let n = ids.len();
        let rows: Vec<Result<Vec<f64>>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| f(i, j)).collect())
            .collect();
        let mut values = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (k, v) in row?.into_iter().enumerate() {
                let j = i + 1 + k;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "pair ({}, {}) has invalid value {v}",
                        ids[i], ids[j]
                    )));
                }
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(DissimilarityMatrix {
            n,
            ids,
            values,
            kernel,
        })
    }

    /// Validates and adopts a matrix computed elsewhere.
    ///
    /// The diagonal must be zero and entries nonnegative. Asymmetries up to
    /// [`SYMMETRY_TOLERANCE`] are averaged; larger ones are rejected.
    pub fn from_external(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n {
            return Err(Error::InvalidMatrix(format!(
                "{} ids but {} rows",
                n,
                rows.len()
            )));
        }
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row '{}' has {} entries (expected {n})",
                    ids[i],
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        for i in 0..n {
            let dii = values[i * n + i];
            if dii.abs() > SYMMETRY_TOLERANCE {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry for '{}' is {dii}",
                    ids[i]
                )));
            }
            values[i * n + i] = 0.0;
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ('{}', '{}') = {v} is not a nonnegative number",
                        ids[i], ids[j]
                    )));
                }
            }
            for j in (i + 1)..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric entries ('{}', '{}'): {a} vs {b}",
                        ids[i], ids[j]
                    )));
                }
                if a != b {
                    let m = 0.5 * (a + b);
                    values[i * n + j] = m;
                    values[j * n + i] = m;
                }
            }
        }
        Ok(DissimilarityMatrix {
            n,
            ids,
            values,
            kernel: KernelTag::External,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn kernel(&self) -> KernelTag {
        self.kernel
    }

    /// Overrides the kernel tag, e.g. for an external matrix known to hold
    /// squared Euclidean distances.
    pub fn with_kernel(mut self, kernel: KernelTag) -> Self {
        self.kernel = kernel;
        self
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n.max(1))
    }

    /// Mean of the off-diagonal entries.
    pub fn mean_offdiag(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let total: f64 = self.values.iter().sum();
        total / (self.n * (self.n - 1)) as f64
    }

    /// Sub-matrix over `idx` (which may repeat indices; repeats are at
    /// distance zero from each other).
    pub fn select(&self, idx: &[usize]) -> DissimilarityMatrix {
        let m = idx.len();
        let mut values = Vec::with_capacity(m * m);
        for &i in idx {
            let row = self.row(i);
            values.extend(idx.iter().map(|&j| row[j]));
        }
        DissimilarityMatrix {
            n: m,
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            values,
            kernel: self.kernel,
        }
    }
}

/// Computes the dissimilarity matrix of `samples` under `kernel`.
pub fn build_matrix(samples: &SampleSet, kernel: &Kernel) -> Result<DissimilarityMatrix> {
    let s = samples.samples();
    DissimilarityMatrix::from_pairs(samples.ids(), kernel.tag(), |i, j| {
        kernel.eval(&s[i], &s[j]).map_err(|e| Error::KernelPair {
            a: s[i].id.clone(),
            b: s[j].id.clone(),
            source: Box::new(e),
        })
    })
}

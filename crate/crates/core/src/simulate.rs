//! Data generators and Monte Carlo study harnesses.
//!
//! Homogeneity studies draw Gaussian groups; classification studies evolve
//! DNA sequences under HKY along two coalescent trees joined at their roots.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::classification_test_matrix;
use crate::error::{Error, Result};
use crate::homogeneity::{homogeneity_test, HomogeneityConfig, HomogeneityMethod};
use crate::kernels::{build_matrix, BaseFreqs, Kernel, Sample, SampleSet};
use crate::rng::{self, StreamRng};
use crate::separation::u_test;
use crate::ustat::Partition;

pub const DEFAULT_KAPPA: f64 = 2.0;
pub const DEFAULT_FREQS: [f64; 4] = [0.25; 4];
pub const DEFAULT_SEQUENCE_LENGTH: usize = 1000;
pub const DEFAULT_RATE: f64 = 0.01;
pub const DEFAULT_GAUSSIAN_LENGTH: usize = 50;
pub const DEFAULT_STUDY_REPS: usize = 200;
pub const DEFAULT_STUDY_PERMUTATIONS: usize = 199;
pub const DEFAULT_STUDY_BOOTSTRAP: usize = 500;

/// `n1` draws from `N(0, I_L)` followed by `n2` draws from `N(mu2 1, I_L)`.
pub fn gaussian_groups(
    n1: usize,
    n2: usize,
    length: usize,
    mu2: f64,
    seed: u64,
) -> Result<SampleSet> {
    if length == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let mut rng = rng::stream(seed, 0);
    let mut samples = Vec::with_capacity(n1 + n2);
    for (group, count, mu) in [(1, n1, 0.0), (2, n2, mu2)] {
        for i in 0..count {
            let v: Vec<f64> = (0..length)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + z
                })
                .collect();
            samples.push(Sample::numeric(format!("g{group}_{i}"), v));
        }
    }
    SampleSet::new(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub children: Vec<usize>,
    /// Length of the edge to the parent (zero at the root).
    pub branch_length: f64,
    pub label: Option<String>,
}

/// Rooted binary tree with branch lengths in coalescent units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
}

impl Tree {
    /// Leaf node indices in storage order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].children.is_empty())
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_empty()).count()
    }

    /// Longest root-to-leaf path length.
    pub fn height(&self) -> f64 {
        let mut best = 0.0f64;
        let mut stack = vec![(self.root, 0.0)];
        while let Some((i, depth)) = stack.pop() {
            let node = &self.nodes[i];
            if node.children.is_empty() {
                best = best.max(depth);
            }
            for &c in &node.children {
                stack.push((c, depth + self.nodes[c].branch_length));
            }
        }
        best
    }

    /// Sum of all branch lengths.
    pub fn total_length(&self) -> f64 {
        self.nodes.iter().map(|n| n.branch_length).sum()
    }
}

fn coalescent_with(n: usize, prefix: &str, rng: &mut StreamRng) -> Result<Tree> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "a coalescent tree needs n >= 2, got {n}"
        )));
    }
    let mut nodes: Vec<TreeNode> = (0..n)
        .map(|i| TreeNode {
            children: Vec::new(),
            branch_length: 0.0,
            label: Some(format!("{prefix}{i}")),
        })
        .collect();
    let mut times = vec![0.0; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut t = 0.0;
    while active.len() > 1 {
        let k = active.len() as f64;
        let wait = Exp::new(k * (k - 1.0) / 2.0).expect("positive rate");
        t += wait.sample(rng);
        let a = active.swap_remove(rng.random_range(0..active.len()));
        let b = active.swap_remove(rng.random_range(0..active.len()));
        let parent = nodes.len();
        for c in [a, b] {
            nodes[c].branch_length = t - times[c];
        }
        nodes.push(TreeNode {
            children: vec![a, b],
            branch_length: 0.0,
            label: None,
        });
        times.push(t);
        active.push(parent);
    }
    Ok(Tree {
        root: active[0],
        nodes,
    })
}

/// Kingman coalescent genealogy of `n` leaves labelled `t0, t1, ...`.
pub fn coalescent_tree(n: usize, seed: u64) -> Result<Tree> {
    coalescent_with(n, "t", &mut rng::stream(seed, 0))
}

/// Joins two trees under a new root. The connecting path between the old
/// roots has length `tau * max(h1, h2)` and is split equally between the two
/// new root edges.
pub fn link_trees(t1: &Tree, t2: &Tree, tau: f64) -> Result<Tree> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!(
            "tau must be finite and >= 0, got {tau}"
        )));
    }
    let half = 0.5 * tau * t1.height().max(t2.height());
    let offset = t1.nodes.len();
    let mut nodes = t1.nodes.clone();
    nodes.extend(t2.nodes.iter().map(|n| TreeNode {
        children: n.children.iter().map(|c| c + offset).collect(),
        ..n.clone()
    }));
    let (r1, r2) = (t1.root, t2.root + offset);
    nodes[r1].branch_length = half;
    nodes[r2].branch_length = half;
    nodes.push(TreeNode {
        children: vec![r1, r2],
        branch_length: 0.0,
        label: None,
    });
    Ok(Tree {
        root: nodes.len() - 1,
        nodes,
    })
}

fn check_hky(kappa: f64, freqs: &[f64; 4]) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let s: f64 = freqs.iter().sum();
    if freqs.iter().any(|f| f.is_nan() || *f <= 0.0) || (s - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "base frequencies must be positive and sum to 1, got {freqs:?}"
        )));
    }
    Ok(())
}

/// HKY transition matrix `P(t)` in `ACGT` order, with `t` in expected
/// substitutions per site.
pub fn hky_transition(t: f64, kappa: f64, freqs: [f64; 4]) -> Result<[[f64; 4]; 4]> {
    check_hky(kappa, &freqs)?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!(
            "branch length must be >= 0, got {t}"
        )));
    }
    let [pa, pc, pg, pt] = freqs;
    let (pr, py) = (pa + pg, pc + pt);
    let beta = 1.0 / (2.0 * kappa * (pa * pg + pc * pt) + 2.0 * pr * py);
    let e1 = (-beta * t).exp();
    let mut p = [[0.0; 4]; 4];
    for (i, row) in p.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let purine_j = j % 2 == 0;
            let (class_pi, other_pi) = if purine_j { (pr, py) } else { (py, pr) };
            let e2 = (-beta * t * (class_pi * kappa + other_pi)).exp();
            let pj = freqs[j];
            *cell = if i == j {
                pj + pj * (1.0 / class_pi - 1.0) * e1 + (class_pi - pj) / class_pi * e2
            } else if (i % 2 == 0) == purine_j {
                pj + pj * (1.0 / class_pi - 1.0) * e1 - pj / class_pi * e2
            } else {
                pj * (1.0 - e1)
            };
        }
    }
    Ok(p)
}

const BASES: [u8; 4] = *b"ACGT";

fn draw(cumulative: &[f64; 4], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    cumulative.iter().position(|&c| u < c).unwrap_or(3)
}

fn cumulate(p: &[f64; 4]) -> [f64; 4] {
    let mut c = [0.0; 4];
    let mut acc = 0.0;
    for (k, v) in p.iter().enumerate() {
        acc += v;
        c[k] = acc;
    }
    c
}

/// Evolves `length` sites down `tree` under HKY and returns the leaf
/// sequences in leaf storage order.
pub fn evolve_hky(
    tree: &Tree,
    length: usize,
    rate: f64,
    kappa: f64,
    freqs: [f64; 4],
    seed: u64,
) -> Result<SampleSet> {
    check_hky(kappa, &freqs)?;
    if length == 0 {
        return Err(Error::Domain("sequence length must be at least 1".into()));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Domain(format!("rate must be positive, got {rate}")));
    }
    let mut rng = rng::stream(seed, 0);
    let root_cdf = cumulate(&freqs);
    let mut states: Vec<Vec<u8>> = vec![Vec::new(); tree.nodes.len()];
    states[tree.root] = (0..length)
        .map(|_| draw(&root_cdf, &mut rng) as u8)
        .collect();
    let mut stack = vec![tree.root];
    while let Some(i) = stack.pop() {
        for &c in &tree.nodes[i].children {
            let p = hky_transition(tree.nodes[c].branch_length * rate, kappa, freqs)?;
            let cdf = p.map(|row| cumulate(&row));
            let child: Vec<u8> = states[i]
                .iter()
                .map(|&b| draw(&cdf[b as usize], &mut rng) as u8)
                .collect();
            states[c] = child;
            stack.push(c);
        }
    }
    let samples = tree
        .leaves()
        .into_iter()
        .map(|i| {
            let id = tree.nodes[i]
                .label
                .clone()
                .unwrap_or_else(|| format!("n{i}"));
            let seq: String = states[i]
                .iter()
                .map(|&b| BASES[b as usize] as char)
                .collect();
            Sample::sequence(id, &seq)
        })
        .collect::<Result<Vec<_>>>()?;
    SampleSet::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    HomSize,
    HomPower,
    ClassPower,
}

impl StudyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StudyKind::HomSize => "hom_size",
            StudyKind::HomPower => "hom_power",
            StudyKind::ClassPower => "class_power",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub study: StudyKind,
    /// Group size, or first-group size for two-group designs.
    pub n1: usize,
    /// Second-group size (ignored by `hom_size`).
    pub n2: usize,
    pub length: usize,
    pub mu2: f64,
    pub tau: f64,
    pub reps: usize,
    pub methods: Vec<HomogeneityMethod>,
    pub permutations: usize,
    pub bootstrap: usize,
    pub restarts: usize,
    pub alpha: f64,
    pub seed: u64,
    pub kappa: f64,
    pub freqs: [f64; 4],
    pub rate: f64,
}

impl StudyConfig {
    pub fn new(study: StudyKind) -> Self {
        let length = match study {
            StudyKind::ClassPower => DEFAULT_SEQUENCE_LENGTH,
            _ => DEFAULT_GAUSSIAN_LENGTH,
        };
        StudyConfig {
            study,
            n1: 10,
            n2: 10,
            length,
            mu2: 0.0,
            tau: 1.0,
            reps: DEFAULT_STUDY_REPS,
            methods: vec![HomogeneityMethod::Max],
            permutations: DEFAULT_STUDY_PERMUTATIONS,
            bootstrap: DEFAULT_STUDY_BOOTSTRAP,
            restarts: crate::homogeneity::DEFAULT_RESTARTS,
            alpha: 0.05,
            seed: 0,
            kappa: DEFAULT_KAPPA,
            freqs: DEFAULT_FREQS,
            rate: DEFAULT_RATE,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Domain("reps must be at least 1".into()));
        }
        match self.study {
            StudyKind::HomSize if self.n1 < 4 => Err(Error::Domain("hom_size needs n >= 4".into())),
            StudyKind::HomPower if self.n1 + self.n2 < 4 => {
                Err(Error::Domain("hom_power needs n1 + n2 >= 4".into()))
            }
            StudyKind::HomSize | StudyKind::HomPower if self.methods.is_empty() => Err(
                Error::Domain("at least one homogeneity method required".into()),
            ),
            StudyKind::ClassPower if self.n1 < 2 || self.n2 < 2 => Err(Error::Domain(
                "class_power needs n1 >= 2 and n2 >= 2".into(),
            )),
            StudyKind::ClassPower => check_hky(self.kappa, &self.freqs),
            _ => Ok(()),
        }
    }
}

/// One line of a study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub study: StudyKind,
    pub method: String,
    pub n1: usize,
    pub n2: usize,
    pub length: usize,
    pub mu2: Option<f64>,
    pub tau: Option<f64>,
    pub reps: usize,
    /// Replicates counted in the denominator.
    pub evaluated: usize,
    /// Replicates dropped because group separation was not significant.
    pub excluded: usize,
    pub rejections: usize,
    /// `rejections / evaluated`; `None` when nothing qualified.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    /// Tab-separated rendering with the generating parameters as `#` comments.
    pub fn to_tsv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# study={} reps={} alpha={} seed={} permutations={} bootstrap={} restarts={}",
            c.study.as_str(),
            c.reps,
            c.alpha,
            c.seed,
            c.permutations,
            c.bootstrap,
            c.restarts
        );
        if c.study == StudyKind::ClassPower {
            let _ = writeln!(
                out,
                "# model=hky kappa={} freqs={},{},{},{} rate={} length={}",
                c.kappa, c.freqs[0], c.freqs[1], c.freqs[2], c.freqs[3], c.rate, c.length
            );
        }
        out.push_str("study\tmethod\tn1\tn2\tlength\tmu2\ttau\treps\tevaluated\texcluded\trejections\trate\n");
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.study.as_str(),
                r.method,
                r.n1,
                r.n2,
                r.length,
                opt(r.mu2),
                opt(r.tau),
                r.reps,
                r.evaluated,
                r.excluded,
                r.rejections,
                opt(r.rate)
            );
        }
        out
    }
}

/// Runs a Monte Carlo study. Replicate `r` draws everything from seeds
/// derived from `(cfg.seed, r)`, so results do not depend on scheduling.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyTable> {
    cfg.validate()?;
    let rows = match cfg.study {
        StudyKind::HomSize | StudyKind::HomPower => homogeneity_rows(cfg)?,
        StudyKind::ClassPower => vec![class_power_row(cfg)?],
    };
    Ok(StudyTable {
        config: cfg.clone(),
        rows,
    })
}

fn homogeneity_rows(cfg: &StudyConfig) -> Result<Vec<StudyRow>> {
    let (n1, n2, mu2) = match cfg.study {
        StudyKind::HomSize => (cfg.n1, 0, 0.0),
        _ => (cfg.n1, cfg.n2, cfg.mu2),
    };
    let outcomes: Vec<Vec<bool>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = rng::child_seed(cfg.seed, r as u64);
            let data = gaussian_groups(n1, n2, cfg.length, mu2, rng::child_seed(rep_seed, 0))?;
            let d = build_matrix(&data, &Kernel::SqEuclidean)?;
            cfg.methods
                .iter()
                .enumerate()
                .map(|(k, &method)| {
                    let hc = HomogeneityConfig {
                        method,
                        alpha: cfg.alpha,
                        seed: rng::child_seed(rep_seed, 1 + k as u64),
                        restarts: cfg.restarts,
                        bootstrap: cfg.bootstrap,
                        permutations: cfg.permutations,
                        stop_at_first_rejection: true,
                        ..HomogeneityConfig::default()
                    };
                    Ok(homogeneity_test(&d, &hc)?.reject)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(cfg
        .methods
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let rejections = outcomes.iter().filter(|o| o[k]).count();
            StudyRow {
                study: cfg.study,
                method: m.as_str().into(),
                n1,
                n2,
                length: cfg.length,
                mu2: Some(mu2),
                tau: None,
                reps: cfg.reps,
                evaluated: cfg.reps,
                excluded: 0,
                rejections,
                rate: Some(rejections as f64 / cfg.reps as f64),
            }
        })
        .collect())
}

/// One classification-power replicate: `None` when the two groups fail the
/// separation test, otherwise whether `x*` was assigned to its own group.
pub fn class_power_replicate(cfg: &StudyConfig, rep_seed: u64) -> Result<Option<bool>> {
    let (n1, n2) = (cfg.n1, cfg.n2);
    let mut tree_rng = rng::stream(rep_seed, 0);
    let t1 = coalescent_with(n1 + 1, "a", &mut tree_rng)?;
    let t2 = coalescent_with(n2, "b", &mut tree_rng)?;
    let star = tree_rng.random_range(0..=n1);
    let tree = link_trees(&t1, &t2, cfg.tau)?;
    let seqs = evolve_hky(
        &tree,
        cfg.length,
        cfg.rate,
        cfg.kappa,
        cfg.freqs,
        rng::child_seed(rep_seed, 1),
    )?;
    let d = build_matrix(
        &seqs,
        &Kernel::Hky {
            freqs: BaseFreqs::Empirical,
        },
    )?;
    let s1: Vec<usize> = (0..=n1).filter(|&i| i != star).collect();
    let s2: Vec<usize> = (n1 + 1..n1 + 1 + n2).collect();
    let p = Partition::new(s1.clone(), s2.clone(), d.n())?;
    let sep = u_test(
        &d,
        &p,
        cfg.permutations,
        rng::child_seed(rep_seed, 2),
        cfg.alpha,
    )?;
    if !sep.reject {
        return Ok(None);
    }
    let c = classification_test_matrix(
        &d,
        &s1,
        &s2,
        star,
        cfg.bootstrap,
        cfg.alpha,
        rng::child_seed(rep_seed, 3),
    )?;
    Ok(Some(c.reject))
}

fn class_power_row(cfg: &StudyConfig) -> Result<StudyRow> {
    let outcomes: Vec<Option<bool>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| class_power_replicate(cfg, rng::child_seed(cfg.seed, r as u64)))
        .collect::<Result<_>>()?;
    let evaluated = outcomes.iter().flatten().count();
    let rejections = outcomes.iter().flatten().filter(|&&b| b).count();
    Ok(StudyRow {
        study: StudyKind::ClassPower,
        method: "classification".into(),
        n1: cfg.n1,
        n2: cfg.n2,
        length: cfg.length,
        mu2: None,
        tau: Some(cfg.tau),
        reps: cfg.reps,
        evaluated,
        excluded: cfg.reps - evaluated,
        rejections,
        rate: (evaluated > 0).then(|| rejections as f64 / evaluated as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_shapes_and_means() {
        let s = gaussian_groups(10, 10, 50, 0.66, 3).unwrap();
        assert_eq!((s.len(), s.width()), (20, 50));
        let rows = s.numeric_rows().unwrap();
        let mean =
            |r: &[&[f64]]| r.iter().flat_map(|x| x.iter()).sum::<f64>() / (r.len() * 50) as f64;
        assert!(mean(&rows[..10]).abs() < 0.15);
        assert!((mean(&rows[10..]) - 0.66).abs() < 0.15);
        assert_eq!(s, gaussian_groups(10, 10, 50, 0.66, 3).unwrap());
    }

    #[test]
    fn coalescent_structure() {
        let t = coalescent_tree(7, 1).unwrap();
        assert_eq!(t.leaf_count(), 7);
        assert_eq!(t.nodes.len(), 13);
        assert!(t
            .nodes
            .iter()
            .all(|n| n.children.is_empty() || n.children.len() == 2));
        assert!(t.nodes.iter().all(|n| n.branch_length >= 0.0));
        assert_eq!(t, coalescent_tree(7, 1).unwrap());
        assert!(coalescent_tree(1, 1).is_err());
    }

    #[test]
    fn link_adds_connecting_length() {
        let t1 = coalescent_tree(4, 2).unwrap();
        let t2 = coalescent_tree(6, 3).unwrap();
        let joined = link_trees(&t1, &t2, 1.0).unwrap();
        let extra = joined.total_length() - t1.total_length() - t2.total_length();
        assert!((extra - t1.height().max(t2.height())).abs() < 1e-12);
        assert_eq!(joined.leaf_count(), 10);
        let flat = link_trees(&t1, &t2, 0.0).unwrap();
        assert!((flat.total_length() - t1.total_length() - t2.total_length()).abs() < 1e-12);
        assert!(link_trees(&t1, &t2, -1.0).is_err());
    }

    #[test]
    fn transition_rows_are_distributions() {
        let f = [0.1, 0.2, 0.3, 0.4];
        for t in [0.0, 0.01, 0.5, 3.0, 50.0] {
            let p = hky_transition(t, 3.0, f).unwrap();
            for (i, row) in p.iter().enumerate() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(row.iter().all(|&v| v >= -1e-15));
                if t == 0.0 {
                    assert!((row[i] - 1.0).abs() < 1e-12);
                }
            }
        }
        let far = hky_transition(1e3, 2.0, f).unwrap();
        for row in far {
            for (a, b) in row.iter().zip(f) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn expected_substitutions_match_branch_length() {
        let f = [0.1, 0.2, 0.3, 0.4];
        let t = 1e-6;
        let p = hky_transition(t, 2.5, f).unwrap();
        let rate: f64 = (0..4).map(|i| f[i] * (1.0 - p[i][i])).sum();
        assert!((rate / t - 1.0).abs() < 1e-4);
    }

    #[test]
    fn tiny_rate_keeps_leaves_identical() {
        let t = coalescent_tree(5, 4).unwrap();
        let s = evolve_hky(&t, 200, 1e-12, 2.0, DEFAULT_FREQS, 9).unwrap();
        let first = s.get(0).as_sequence().unwrap().to_vec();
        assert!(s
            .samples()
            .iter()
            .all(|x| x.as_sequence().unwrap() == first.as_slice()));
    }

    #[test]
    fn small_studies_run_and_are_deterministic() {
        let mut cfg = StudyConfig::new(StudyKind::ClassPower);
        cfg.n1 = 4;
        cfg.n2 = 4;
        cfg.reps = 6;
        cfg.length = 300;
        cfg.tau = 2.0;
        cfg.bootstrap = 199;
        cfg.permutations = 99;
        cfg.seed = 5;
        let a = run_study(&cfg).unwrap();
        assert_eq!(a, run_study(&cfg).unwrap());
        let r = &a.rows[0];
        assert_eq!(r.evaluated + r.excluded, 6);

        let mut h = StudyConfig::new(StudyKind::HomPower);
        h.n1 = 5;
        h.n2 = 5;
        h.mu2 = 3.0;
        h.reps = 4;
        h.bootstrap = 200;
        h.methods = vec![HomogeneityMethod::Max, HomogeneityMethod::Multiple];
        let t = run_study(&h).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.to_tsv().lines().count() == 4);
    }
}

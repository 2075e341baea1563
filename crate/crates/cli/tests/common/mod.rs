#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use uclust_core::simulate::{coalescent_tree, evolve_hky, gaussian_groups};
use uclust_core::SampleSet;

pub const BIN: &str = env!("CARGO_BIN_EXE_uclust");

/// A fresh scratch directory per test.
pub fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("uclust-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

pub fn write_csv(path: &Path, set: &SampleSet) {
    let mut s = String::from("id");
    for k in 0..set.width() {
        let _ = write!(s, ",f{k}");
    }
    s.push('\n');
    for x in set.samples() {
        s.push_str(&x.id);
        for v in x.as_numeric().unwrap() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

pub fn write_groups(path: &Path, rows: &[(String, &str)]) {
    let mut s = String::from("id,group\n");
    for (id, g) in rows {
        let _ = writeln!(s, "{id},{g}");
    }
    fs::write(path, s).unwrap();
}

/// Two shifted Gaussian groups plus one query point `q` drawn like group 1.
/// Writes `x.csv` and `g.csv`.
pub fn two_group_fixture(dir: &Path, n1: usize, n2: usize, shift: f64, seed: u64) {
    let base = gaussian_groups(n1 + 1, n2, 6, shift, seed).unwrap();
    let mut samples = base.into_samples();
    let q = samples.remove(n1);
    let mut groups: Vec<(String, &str)> =
        samples[..n1].iter().map(|s| (s.id.clone(), "A")).collect();
    groups.extend(samples[n1..].iter().map(|s| (s.id.clone(), "B")));
    samples.push(uclust_core::Sample::numeric(
        "q",
        q.as_numeric().unwrap().to_vec(),
    ));
    write_csv(&dir.join("x.csv"), &SampleSet::new(samples).unwrap());
    write_groups(&dir.join("g.csv"), &groups);
}

/// Three groups on separate axes and a query near the second. Writes
/// `x3.csv` and `g3.csv`.
pub fn three_group_fixture(dir: &Path, seed: u64) {
    let mut samples = Vec::new();
    let mut groups = Vec::new();
    for (k, label) in ["red", "green", "blue"].iter().enumerate() {
        let base = gaussian_groups(6, 0, 3, 0.0, seed + k as u64).unwrap();
        for (i, s) in base.samples().iter().enumerate() {
            let mut v = s.as_numeric().unwrap().to_vec();
            v[k] += 8.0;
            let id = format!("{label}{i}");
            groups.push((id.clone(), *label));
            samples.push(uclust_core::Sample::numeric(id, v));
        }
    }
    samples.push(uclust_core::Sample::numeric("q", vec![0.2, 8.1, -0.3]));
    write_csv(&dir.join("x3.csv"), &SampleSet::new(samples).unwrap());
    write_groups(&dir.join("g3.csv"), &groups);
}

/// Coalescent alignment of `n` sequences. Writes `seqs.fa` and returns the ids.
pub fn fasta_fixture(dir: &Path, n: usize, length: usize, seed: u64) -> Vec<String> {
    let tree = coalescent_tree(n, seed).unwrap();
    let set = evolve_hky(&tree, length, 0.05, 2.0, [0.25; 4], seed).unwrap();
    let mut s = String::new();
    for x in set.samples() {
        let _ = writeln!(s, ">{}", x.id);
        let seq = x.as_sequence().unwrap();
        for chunk in seq.chunks(60) {
            s.push_str(std::str::from_utf8(chunk).unwrap());
            s.push('\n');
        }
    }
    fs::write(dir.join("seqs.fa"), s).unwrap();
    set.ids()
}

pub fn uclust(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(dir)
        .args(args)
        .env_remove("USTAT_SEED")
        .env_remove("USTAT_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// The envelope bytes with the elapsed-time line removed.
pub fn strip_timing(json: &str) -> String {
    json.lines()
        .filter(|l| !l.trim_start().starts_with("\"elapsed_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

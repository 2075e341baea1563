//! JSON result envelope (schema `ustat-result/1`) and the plain-text reports.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use uclust_core::{ClassificationResult, HomogeneityResult, KernelTag, StudyTable, TestResult};

use crate::io::write_distmatrix;

pub const SCHEMA: &str = "ustat-result/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub schema: String,
    pub tool_version: String,
    /// Arguments as given, without the program name and `--threads`.
    pub command: Vec<String>,
    pub seed: u64,
    pub timing: Timing,
    pub result: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Output {
    Distances(MatrixReport),
    UTest(UTestReport),
    Homogeneity(HomogeneityReport),
    Classification(ClassificationReport),
    Study(StudyTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub kernel: KernelTag,
    pub ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UTestReport {
    #[serde(flatten)]
    pub test: TestResult,
    pub kernel: KernelTag,
    pub groups: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    #[serde(flatten)]
    pub test: HomogeneityResult,
    /// Sample ids on each side of the best split.
    pub split_ids: [Vec<String>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    #[serde(flatten)]
    pub test: ClassificationResult,
    pub kernel: KernelTag,
    pub query: String,
    /// Labels of the two groups compared, candidate group first.
    pub compared_labels: [String; 2],
    pub assigned_label: Option<String>,
}

fn p_fmt(p: f64) -> String {
    if p != 0.0 && p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.6}")
    }
}

fn verdict(reject: bool) -> &'static str {
    if reject {
        "reject H0"
    } else {
        "do not reject H0"
    }
}

impl Output {
    /// Human-readable report.
    pub fn render(&self) -> String {
        let mut s = String::new();
        match self {
            Output::Distances(m) => {
                let d = uclust_core::DissimilarityMatrix::from_external(
                    m.ids.clone(),
                    m.values.clone(),
                )
                .expect("matrix built by this tool");
                s.push_str(&write_distmatrix(&d));
            }
            Output::UTest(r) => {
                let t = &r.test;
                let _ = writeln!(s, "U test for separation ({} kernel)", r.kernel);
                let _ = writeln!(
                    s,
                    "groups      {} (n1={}) vs {} (n2={})",
                    r.groups[0], t.n1, r.groups[1], t.n2
                );
                let _ = writeln!(s, "Bn          {}", t.statistic);
                let _ = writeln!(
                    s,
                    "p-value     {} ({} permutations)",
                    p_fmt(t.p_value),
                    t.replicates
                );
                let _ = writeln!(s, "alpha       {}", t.alpha);
                let _ = writeln!(s, "decision    {}", verdict(t.reject));
                let _ = writeln!(s, "seed        {}", t.seed);
            }
            Output::Homogeneity(r) => {
                let t = &r.test;
                let _ = writeln!(
                    s,
                    "Homogeneity test, {} method ({} kernel, n={})",
                    t.method.as_str(),
                    t.kernel,
                    t.n
                );
                if let Some(z) = t.z_max {
                    let _ = writeln!(s, "z_max       {z}");
                }
                if let Some(p) = t.min_p {
                    let _ = writeln!(s, "min p       {}", p_fmt(p));
                }
                let _ = writeln!(s, "gamma       {} (configurations)", t.gamma);
                let _ = writeln!(s, "tested      {}", t.configurations_tested);
                let _ = writeln!(s, "p-value     {}", p_fmt(t.p_value));
                let _ = writeln!(s, "alpha       {}", t.alpha);
                let _ = writeln!(s, "decision    {}", verdict(t.reject));
                let _ = writeln!(
                    s,
                    "best split  {{{}}} | {{{}}}",
                    r.split_ids[0].join(", "),
                    r.split_ids[1].join(", ")
                );
                let _ = writeln!(s, "seed        {}", t.seed);
            }
            Output::Classification(r) => {
                let t = &r.test;
                let _ = writeln!(s, "Classification of {} ({} kernel)", r.query, r.kernel);
                if t.heuristic {
                    let _ = writeln!(
                        s,
                        "note        groups chosen by nearest centroid (heuristic)"
                    );
                }
                let _ = writeln!(s, "candidate   {}", r.compared_labels[0]);
                let _ = writeln!(s, "versus      {}", r.compared_labels[1]);
                let _ = writeln!(s, "D           {}", t.d_observed);
                let _ = writeln!(
                    s,
                    "p-value     {} ({} bootstrap replicates)",
                    p_fmt(t.p_value),
                    t.replicates
                );
                let _ = writeln!(s, "alpha       {}", t.alpha);
                let assigned = r
                    .assigned_label
                    .as_deref()
                    .unwrap_or("none (not significant)");
                let _ = writeln!(s, "assigned    {assigned}");
                let _ = writeln!(s, "seed        {}", t.seed);
            }
            Output::Study(t) => s.push_str(&t.to_tsv()),
        }
        s
    }
}

/// Parses an envelope and drops its timing, the one field that legitimately
/// differs between identical runs.
pub fn without_timing(json: &str) -> serde_json::Result<serde_json::Value> {
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timing");
    }
    Ok(v)
}

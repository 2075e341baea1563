//! File formats: numeric CSV, FASTA alignments, square distance matrices and
//! `id,group` maps.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use uclust_core::kernels::SYMMETRY_TOLERANCE;
use uclust_core::{DissimilarityMatrix, Sample, SampleSet};

use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn input_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}:{line}: {msg}", path.display()))
}

fn reader(text: &str, delimiter: u8) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .delimiter(delimiter)
        .from_reader(text.as_bytes())
}

fn sniff_delimiter(text: &str) -> u8 {
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if first.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

/// Numeric samples: a header row (id column, then feature names) followed by
/// one row per sample.
pub fn read_csv_samples(path: &Path) -> Result<SampleSet, CliError> {
    let text = read(path)?;
    let mut rows = reader(&text, sniff_delimiter(&text)).into_records();
    let header = rows
        .next()
        .ok_or_else(|| input_err(path, 1, "empty file"))?
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let width = header.len();
    if width < 2 {
        return Err(input_err(
            path,
            record_line(&header),
            "header needs an id column and at least one feature",
        ));
    }
    let mut samples = Vec::new();
    for rec in rows {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record_line(&rec);
        if rec.len() != width {
            return Err(input_err(
                path,
                line,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        let values = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(k, v)| {
                v.parse::<f64>().map_err(|_| {
                    input_err(
                        path,
                        line,
                        format!("column '{}': '{v}' is not a number", &header[k + 1]),
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        samples.push(Sample::numeric(&rec[0], values));
    }
    SampleSet::new(samples).map_err(CliError::Core)
}

/// Aligned sequences in FASTA format. The record name is the first
/// whitespace-separated token of the header line.
pub fn read_fasta(path: &Path) -> Result<SampleSet, CliError> {
    let text = read(path)?;
    let mut records: Vec<(String, usize, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if let Some(header) = line.strip_prefix('>') {
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(input_err(path, i + 1, "record without a name"));
            }
            records.push((id, i + 1, String::new()));
        } else if !line.trim().is_empty() {
            match records.last_mut() {
                Some(r) => r.2.extend(line.chars().filter(|c| !c.is_whitespace())),
                None => {
                    return Err(input_err(
                        path,
                        i + 1,
                        "sequence data before the first '>' header",
                    ))
                }
            }
        }
    }
    let first = records
        .first()
        .ok_or_else(|| input_err(path, 1, "no FASTA records"))?;
    let len = first.2.len();
    let mut samples = Vec::with_capacity(records.len());
    for (id, line, seq) in &records {
        if seq.len() != len {
            return Err(input_err(
                path,
                *line,
                format!(
                    "record '{id}' has length {}, expected {len} (length of '{}')",
                    seq.len(),
                    first.0
                ),
            ));
        }
        samples.push(Sample::sequence(id.clone(), seq).map_err(|e| input_err(path, *line, e))?);
    }
    SampleSet::new(samples).map_err(CliError::Core)
}

/// Square matrix with a header row of column ids and one row per id; rows
/// must list the same ids in the same order. Tab or comma separated.
pub fn read_distmatrix(path: &Path) -> Result<DissimilarityMatrix, CliError> {
    let text = read(path)?;
    let mut rows = reader(&text, sniff_delimiter(&text)).into_records();
    let header = rows
        .next()
        .ok_or_else(|| input_err(path, 1, "empty file"))?
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = ids.len();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut lines = Vec::with_capacity(n);
    for rec in rows {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record_line(&rec);
        if values.len() == n {
            return Err(input_err(
                path,
                line,
                format!("matrix is not square: more than {n} rows"),
            ));
        }
        if rec.len() != n + 1 {
            return Err(input_err(
                path,
                line,
                format!("expected {} fields, found {}", n + 1, rec.len()),
            ));
        }
        let want = &ids[values.len()];
        if &rec[0] != want {
            return Err(input_err(
                path,
                line,
                format!("row id '{}' does not match column id '{want}'", &rec[0]),
            ));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| input_err(path, line, format!("'{v}' is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        values.push(row);
        lines.push(line);
    }
    if values.len() != n {
        return Err(input_err(
            path,
            lines.last().copied().unwrap_or(1),
            format!(
                "matrix is not square: {} rows for {n} columns",
                values.len()
            ),
        ));
    }
    for i in 0..n {
        for j in 0..i {
            if (values[i][j] - values[j][i]).abs() > SYMMETRY_TOLERANCE {
                return Err(input_err(
                    path,
                    lines[i],
                    format!(
                        "asymmetric entry ({}, {}): {} vs {}",
                        ids[i], ids[j], values[i][j], values[j][i]
                    ),
                ));
            }
        }
    }
    DissimilarityMatrix::from_external(ids, values).map_err(CliError::Core)
}

/// Matrix as TSV in the format read by [`read_distmatrix`]. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_distmatrix(d: &DissimilarityMatrix) -> String {
    let mut out = String::from("id");
    for id in d.ids() {
        out.push('\t');
        out.push_str(id);
    }
    out.push('\n');
    for (i, row) in d.rows().enumerate() {
        out.push_str(&d.ids()[i]);
        for v in row {
            out.push('\t');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// Sample-to-group assignment. Labels keep their order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMap {
    pub labels: Vec<String>,
    pub members: Vec<Vec<String>>,
}

impl GroupMap {
    /// Indices of each group's members in `ids`; every member must exist.
    pub fn resolve(&self, ids: &[String]) -> Result<Vec<Vec<usize>>, CliError> {
        let index: HashMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        self.members
            .iter()
            .map(|m| {
                m.iter()
                    .map(|id| {
                        index.get(id.as_str()).copied().ok_or_else(|| {
                            CliError::Input(format!("group member '{id}' is not in the input"))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Two-column `id,group` CSV; an `id,group` header row is optional.
pub fn read_groups(path: &Path) -> Result<GroupMap, CliError> {
    let text = read(path)?;
    let mut map = GroupMap {
        labels: Vec::new(),
        members: Vec::new(),
    };
    let mut seen = HashMap::new();
    for (k, rec) in reader(&text, sniff_delimiter(&text))
        .into_records()
        .enumerate()
    {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(input_err(
                path,
                line,
                format!("expected 2 fields (id,group), found {}", rec.len()),
            ));
        }
        if k == 0 && rec[0].eq_ignore_ascii_case("id") && rec[1].eq_ignore_ascii_case("group") {
            continue;
        }
        if let Some(prev) = seen.insert(rec[0].to_string(), line) {
            return Err(input_err(
                path,
                line,
                format!("id '{}' already assigned on line {prev}", &rec[0]),
            ));
        }
        let g = match map.position(&rec[1]) {
            Some(g) => g,
            None => {
                map.labels.push(rec[1].to_string());
                map.members.push(Vec::new());
                map.labels.len() - 1
            }
        };
        map.members[g].push(rec[0].to_string());
    }
    if map.labels.is_empty() {
        return Err(input_err(path, 1, "no group assignments"));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp(name: &str, body: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("uclust-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    #[test]
    fn csv_samples() {
        let p = temp("a.csv", "id,f1,f2\na,1,2\nb,3,4\nc,5,6.5\n");
        let s = read_csv_samples(&p).unwrap();
        assert_eq!((s.len(), s.width()), (3, 2));
        assert_eq!(s.ids(), vec!["a", "b", "c"]);
        let bad = temp("b.csv", "id,f1,f2\na,1,2\nb,3\n");
        let e = read_csv_samples(&bad).unwrap_err().to_string();
        assert!(e.contains(":3:"), "{e}");
        let nan = temp("c.csv", "id,f1\na,x\n");
        assert!(read_csv_samples(&nan)
            .unwrap_err()
            .to_string()
            .contains("'f1'"));
    }

    #[test]
    fn fasta_lengths() {
        let ok = temp("a.fa", ">s1 first\nACGT\nACGT\n>s2\nACGTACGA\n");
        let s = read_fasta(&ok).unwrap();
        assert_eq!(s.ids(), vec!["s1", "s2"]);
        let body = format!(">x\n{}\n>y\n{}\n", "A".repeat(100), "A".repeat(99));
        let e = read_fasta(&temp("b.fa", &body)).unwrap_err().to_string();
        assert!(e.contains(":3:") && e.contains("'y'"), "{e}");
    }

    #[test]
    fn distmatrix_round_trip_and_checks() {
        let p = temp(
            "d.tsv",
            "id\ta\tb\tc\td\na\t0\t1\t2\t3\nb\t1\t0\t4\t5\nc\t2\t4\t0\t6\nd\t3\t5\t6\t0\n",
        );
        let d = read_distmatrix(&p).unwrap();
        assert_eq!(d.n(), 4);
        assert_eq!(d.kernel(), uclust_core::KernelTag::External);
        let again = read_distmatrix(&temp("e.tsv", &write_distmatrix(&d))).unwrap();
        assert_eq!(d, again);
        let asym = temp("f.tsv", "id\ta\tb\na\t0\t1\nb\t1.5\t0\n");
        assert!(read_distmatrix(&asym)
            .unwrap_err()
            .to_string()
            .contains(":3:"));
        let ragged = temp("g.csv", "id,a,b\na,0,1\n");
        assert!(read_distmatrix(&ragged)
            .unwrap_err()
            .to_string()
            .contains("not square"));
        let ids = temp("h.csv", "id,a,b\na,0,1\nc,1,0\n");
        assert!(read_distmatrix(&ids).is_err());
    }

    #[test]
    fn group_maps() {
        let g = read_groups(&temp("g.csv", "id,group\na,x\nb,y\nc,x\n")).unwrap();
        assert_eq!(g.labels, vec!["x", "y"]);
        assert_eq!(g.members, vec![vec!["a", "c"], vec!["b"]]);
        let ids: Vec<String> = ["c", "b", "a"].iter().map(|s| s.to_string()).collect();
        assert_eq!(g.resolve(&ids).unwrap(), vec![vec![2, 0], vec![1]]);
        assert!(g.resolve(&ids[..2]).is_err());
        assert!(read_groups(&temp("h.csv", "a,x\na,y\n")).is_err());
    }
}

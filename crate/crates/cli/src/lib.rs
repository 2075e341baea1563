//! Library behind the `uclust` binary: argument parsing, file formats and
//! command execution. [`run`] is the whole program minus process exit.

pub mod args;
pub mod envelope;
pub mod io;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use uclust_core::{
    build_matrix, centroid_multiway_classify, classification_test_matrix, homogeneity_test,
    run_study, u_test, DissimilarityMatrix, HomogeneityConfig, Kernel, Partition, SampleSet,
    StudyConfig,
};

use args::{
    ClassifyArgs, Cli, Command, Common, DistArgs, HomogeneityArgs, InputArgs, InputFormat,
    KernelArg,
};
use args::{SimulateArgs, UtestArgs};
use envelope::{
    ClassificationReport, Envelope, HomogeneityReport, MatrixReport, Output, Timing, UTestReport,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] uclust_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Parses `argv` (program name first), executes the command and writes the
/// report to `out` or the `--output` file. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let echo = command_echo(&argv[1..]);
    match execute(cli, echo, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// The arguments to record in the envelope; `--threads` is left out so the
/// envelope is identical for any thread count.
pub fn command_echo(args: &[OsString]) -> Vec<String> {
    let mut echo = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        let a = a.to_string_lossy();
        if skip {
            skip = false;
        } else if a == "--threads" {
            skip = true;
        } else if !a.starts_with("--threads=") {
            echo.push(a.into_owned());
        }
    }
    echo
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Dist(a) => &a.common,
        Command::Utest(a) => &a.common,
        Command::Homogeneity(a) => &a.common,
        Command::Classify(a) => &a.common,
        Command::Simulate(a) => &a.common,
    }
}

fn execute(cli: Cli, command: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    let c = common(&cli.command);
    let seed = match (c.seed, c.json) {
        (Some(s), _) => s,
        (None, true) => {
            return Err(CliError::Usage(
                "--json requires --seed (or USTAT_SEED)".into(),
            ))
        }
        (None, false) => fresh_seed(),
    };
    let (json, output, threads) = (c.json, c.output.clone(), c.threads);
    let start = Instant::now();
    let result = match threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?
            .install(|| dispatch(&cli.command, seed))?,
        None => dispatch(&cli.command, seed)?,
    };
    let text = if json {
        let env = Envelope {
            schema: envelope::SCHEMA.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command,
            seed,
            timing: Timing {
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            },
            result,
        };
        let mut s =
            serde_json::to_string_pretty(&env).map_err(|e| CliError::Input(e.to_string()))?;
        s.push('\n');
        s
    } else {
        let mut s = result.render();
        if !matches!(result, Output::Distances(_) | Output::Study(_)) && c.seed.is_none() {
            s.push_str("(seed generated; pass --seed to reproduce)\n");
        }
        s
    };
    match output {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(CliError::Io),
    }
}

fn fresh_seed() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    let t = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos());
    uclust_core::rng::child_seed(t as u64, u64::from(std::process::id()))
}

fn dispatch(cmd: &Command, seed: u64) -> Result<Output, CliError> {
    match cmd {
        Command::Dist(a) => dist(a),
        Command::Utest(a) => utest(a, seed),
        Command::Homogeneity(a) => homogeneity(a, seed),
        Command::Classify(a) => classify(a, seed),
        Command::Simulate(a) => simulate(a, seed),
    }
}

fn freqs(v: &Option<Vec<f64>>) -> Result<Option<[f64; 4]>, CliError> {
    match v {
        None => Ok(None),
        Some(v) => <[f64; 4]>::try_from(v.as_slice()).map(Some).map_err(|_| {
            CliError::Usage(format!("--freqs needs 4 values (A,C,G,T), got {}", v.len()))
        }),
    }
}

fn load_samples(path: &Path, format: Option<InputFormat>) -> Result<SampleSet, CliError> {
    let format = format.unwrap_or_else(|| {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        match ext.as_str() {
            "fa" | "fasta" | "fas" | "fna" | "aln" => InputFormat::Fasta,
            _ => InputFormat::Csv,
        }
    });
    match format {
        InputFormat::Csv => io::read_csv_samples(path),
        InputFormat::Fasta => io::read_fasta(path),
    }
}

fn pick_kernel(samples: &SampleSet, arg: Option<KernelArg>, f: Option<[f64; 4]>) -> Kernel {
    let default = if samples.is_numeric() {
        KernelArg::Sqeuclid
    } else {
        KernelArg::Hky
    };
    arg.unwrap_or(default).kernel(f)
}

/// The loaded input: always a matrix, plus the samples and kernel when the
/// input was raw data.
struct Loaded {
    matrix: DissimilarityMatrix,
    samples: Option<(SampleSet, Kernel)>,
}

fn load(a: &InputArgs) -> Result<Loaded, CliError> {
    let f = freqs(&a.freqs)?;
    if let Some(path) = &a.dist {
        let mut m = io::read_distmatrix(path)?;
        if let Some(k) = a.kernel {
            m = m.with_kernel(k.kernel(f).tag());
        }
        return Ok(Loaded {
            matrix: m,
            samples: None,
        });
    }
    let path = a.input.as_ref().expect("clap requires --input or --dist");
    let samples = load_samples(path, a.format)?;
    let kernel = pick_kernel(&samples, a.kernel, f);
    let matrix = build_matrix(&samples, &kernel)?;
    Ok(Loaded {
        matrix,
        samples: Some((samples, kernel)),
    })
}

fn dist(a: &DistArgs) -> Result<Output, CliError> {
    let samples = load_samples(&a.input, a.format)?;
    let kernel = pick_kernel(&samples, a.kernel, freqs(&a.freqs)?);
    let d = build_matrix(&samples, &kernel)?;
    Ok(Output::Distances(MatrixReport {
        kernel: d.kernel(),
        ids: d.ids().to_vec(),
        values: d.rows().map(<[f64]>::to_vec).collect(),
    }))
}

fn label_index(groups: &io::GroupMap, label: &str) -> Result<usize, CliError> {
    groups
        .position(label)
        .ok_or_else(|| CliError::Input(format!("group '{label}' not found in the group file")))
}

fn two_labels(
    groups: &io::GroupMap,
    g1: &Option<String>,
    g2: &Option<String>,
) -> Result<[usize; 2], CliError> {
    match (g1, g2) {
        (Some(a), Some(b)) => Ok([label_index(groups, a)?, label_index(groups, b)?]),
        (None, None) if groups.labels.len() == 2 => Ok([0, 1]),
        (None, None) => Err(CliError::Usage(format!(
            "the group file has {} labels; choose two with --g1 and --g2",
            groups.labels.len()
        ))),
        _ => Err(CliError::Usage(
            "--g1 and --g2 must be given together".into(),
        )),
    }
}

fn utest(a: &UtestArgs, seed: u64) -> Result<Output, CliError> {
    let loaded = load(&a.input)?;
    let groups = io::read_groups(&a.groups)?;
    let [i, j] = two_labels(&groups, &a.g1, &a.g2)?;
    if i == j {
        return Err(CliError::Usage("--g1 and --g2 must differ".into()));
    }
    let idx = groups.resolve(loaded.matrix.ids())?;
    let (n1, n2) = (idx[i].len(), idx[j].len());
    let sub = loaded
        .matrix
        .select(&[idx[i].as_slice(), idx[j].as_slice()].concat());
    let p = Partition::new((0..n1).collect(), (n1..n1 + n2).collect(), n1 + n2)?;
    let test = u_test(&sub, &p, a.permutations, seed, a.alpha)?;
    Ok(Output::UTest(UTestReport {
        test,
        kernel: sub.kernel(),
        groups: [groups.labels[i].clone(), groups.labels[j].clone()],
    }))
}

fn homogeneity(a: &HomogeneityArgs, seed: u64) -> Result<Output, CliError> {
    let loaded = load(&a.input)?;
    let d = match (&a.groups, &a.group) {
        (Some(path), Some(label)) => {
            let groups = io::read_groups(path)?;
            let g = label_index(&groups, label)?;
            let idx = groups.resolve(loaded.matrix.ids())?;
            loaded.matrix.select(&idx[g])
        }
        _ => loaded.matrix,
    };
    let cfg = HomogeneityConfig {
        method: a.method.into(),
        alpha: a.alpha,
        seed,
        restarts: a.restarts,
        bootstrap: a.bootstrap,
        permutations: a.permutations,
        exhaustive_threshold: a.exhaustive_threshold,
        stop_at_first_rejection: a.stop_early,
    };
    let test = homogeneity_test(&d, &cfg)?;
    let names = |s: &[usize]| s.iter().map(|&i| d.ids()[i].clone()).collect::<Vec<_>>();
    let split_ids = [
        names(test.best_partition.s1()),
        names(test.best_partition.s2()),
    ];
    Ok(Output::Homogeneity(HomogeneityReport { test, split_ids }))
}

fn classify(a: &ClassifyArgs, seed: u64) -> Result<Output, CliError> {
    let loaded = load(&a.input)?;
    let groups = io::read_groups(&a.groups)?;
    if groups.members.iter().flatten().any(|id| id == &a.query) {
        return Err(CliError::Input(format!(
            "query '{}' is listed in the group file",
            a.query
        )));
    }
    let ids = loaded.matrix.ids();
    let star = ids
        .iter()
        .position(|id| id == &a.query)
        .ok_or_else(|| CliError::Input(format!("query '{}' is not in the input", a.query)))?;
    let idx = groups.resolve(ids)?;
    let kernel = loaded.matrix.kernel();
    let test = if groups.labels.len() == 2 {
        let (n1, n2) = (idx[0].len(), idx[1].len());
        let sub = loaded
            .matrix
            .select(&[idx[0].as_slice(), idx[1].as_slice(), &[star]].concat());
        let s1: Vec<usize> = (0..n1).collect();
        let s2: Vec<usize> = (n1..n1 + n2).collect();
        classification_test_matrix(&sub, &s1, &s2, n1 + n2, a.replicates, a.alpha, seed)?
    } else {
        let (samples, k) = loaded.samples.as_ref().ok_or_else(|| {
            CliError::Usage(
                "more than two groups needs raw samples (--input) for the centroid step".into(),
            )
        })?;
        let sets: Vec<SampleSet> = idx.iter().map(|g| samples.select(g)).collect();
        centroid_multiway_classify(&sets, samples.get(star), k, a.replicates, a.alpha, seed)?
    };
    let label = |g: usize| groups.labels[g].clone();
    Ok(Output::Classification(ClassificationReport {
        kernel,
        query: a.query.clone(),
        compared_labels: [label(test.compared[0]), label(test.compared[1])],
        assigned_label: test.assigned_group.map(label),
        test,
    }))
}

fn simulate(a: &SimulateArgs, seed: u64) -> Result<Output, CliError> {
    let mut cfg = StudyConfig::new(a.study.into());
    cfg.seed = seed;
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { cfg.$field = v; })* };
    }
    set!(
        n1,
        n2,
        length,
        mu2,
        tau,
        reps,
        permutations,
        bootstrap,
        restarts,
        alpha,
        kappa,
        rate
    );
    if let Some(m) = &a.methods {
        cfg.methods = m.iter().map(|&m| m.into()).collect();
    }
    if let Some(f) = freqs(&a.freqs)? {
        cfg.freqs = f;
    }
    Ok(Output::Study(run_study(&cfg)?))
}

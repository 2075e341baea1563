use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use uclust_core::homogeneity::{DEFAULT_EXHAUSTIVE_THRESHOLD, DEFAULT_RESTARTS};
use uclust_core::separation::DEFAULT_PERMUTATIONS;
use uclust_core::{BaseFreqs, HomogeneityMethod, Kernel, StudyKind};

#[derive(Debug, Parser)]
#[command(
    name = "uclust",
    version,
    about = "U-statistic tests for separation, homogeneity and classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a dissimilarity matrix and print it as TSV.
    Dist(DistArgs),
    /// Permutation test for separation between two labelled groups.
    Utest(UtestArgs),
    /// Test whether a set of observations forms one homogeneous group.
    Homogeneity(HomogeneityArgs),
    /// Decide which group a new observation belongs to.
    Classify(ClassifyArgs),
    /// Run a simulation study and print its rejection-rate table.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed for all resampling.
    #[arg(long, env = "USTAT_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "USTAT_THREADS")]
    pub threads: Option<usize>,
    /// Emit a JSON result envelope instead of the text report.
    #[arg(long)]
    pub json: bool,
    /// Write the output to this file instead of stdout.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Fasta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    #[value(alias = "sq_euclidean")]
    Sqeuclid,
    #[value(alias = "euclidean")]
    Euclid,
    /// Proportion of differing comparable sites.
    Hamming,
    /// Count of differing sites.
    #[value(name = "hamming_count", alias = "hamming-count")]
    HammingCount,
    Hky,
}

impl KernelArg {
    pub fn kernel(self, freqs: Option<[f64; 4]>) -> Kernel {
        match self {
            KernelArg::Sqeuclid => Kernel::SqEuclidean,
            KernelArg::Euclid => Kernel::Euclidean,
            KernelArg::Hamming => Kernel::Hamming { normalize: true },
            KernelArg::HammingCount => Kernel::Hamming { normalize: false },
            KernelArg::Hky => Kernel::Hky {
                freqs: freqs.map_or(BaseFreqs::Empirical, BaseFreqs::Fixed),
            },
        }
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "dist"])))]
pub struct InputArgs {
    /// Samples: CSV (id column then features) or FASTA alignment.
    #[arg(long, short = 'i')]
    pub input: Option<PathBuf>,
    /// Input format; guessed from the file extension when omitted.
    #[arg(long, requires = "input")]
    pub format: Option<InputFormat>,
    /// Precomputed square dissimilarity matrix (TSV or CSV).
    #[arg(long)]
    pub dist: Option<PathBuf>,
    /// Kernel for --input; with --dist, declares how the matrix was computed.
    #[arg(long, short = 'k')]
    pub kernel: Option<KernelArg>,
    /// Fixed A,C,G,T frequencies for the hky kernel.
    #[arg(long, value_delimiter = ',')]
    pub freqs: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Samples: CSV (id column then features) or FASTA alignment.
    #[arg(long, short = 'i')]
    pub input: PathBuf,
    #[arg(long)]
    pub format: Option<InputFormat>,
    #[arg(long, short = 'k')]
    pub kernel: Option<KernelArg>,
    #[arg(long, value_delimiter = ',')]
    pub freqs: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct UtestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Two-column id,group file.
    #[arg(long, short = 'g')]
    pub groups: PathBuf,
    /// First group label (default: first label in the group file).
    #[arg(long)]
    pub g1: Option<String>,
    /// Second group label (default: second label in the group file).
    #[arg(long)]
    pub g2: Option<String>,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Max,
    Multiple,
    Bonferroni,
}

impl From<MethodArg> for HomogeneityMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Max => HomogeneityMethod::Max,
            MethodArg::Multiple => HomogeneityMethod::Multiple,
            MethodArg::Bonferroni => HomogeneityMethod::Bonferroni,
        }
    }
}

#[derive(Debug, Args)]
pub struct HomogeneityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Restrict the test to one group of an id,group file.
    #[arg(long, short = 'g', requires = "group")]
    pub groups: Option<PathBuf>,
    /// Group label to test when --groups is given.
    #[arg(long, requires = "groups")]
    pub group: Option<String>,
    #[arg(long, short = 'm', value_enum, default_value_t = MethodArg::Max)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Bootstrap replicates for the variance estimate (max method).
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Clustering restarts (max method).
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Permutations per configuration (multiple and bonferroni methods).
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    /// Largest n for which the max method enumerates every configuration.
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_THRESHOLD)]
    pub exhaustive_threshold: usize,
    /// Stop the multiple method at the first rejecting configuration.
    #[arg(long)]
    pub stop_early: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Two-column id,group file; the first label listed is group 1.
    #[arg(long, short = 'g')]
    pub groups: PathBuf,
    /// Id of the observation to classify; must not appear in the group file.
    #[arg(long, short = 'q')]
    pub query: String,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyArg {
    #[value(name = "hom_size", alias = "hom-size")]
    HomSize,
    #[value(name = "hom_power", alias = "hom-power")]
    HomPower,
    #[value(name = "class_power", alias = "class-power")]
    ClassPower,
}

impl From<StudyArg> for StudyKind {
    fn from(s: StudyArg) -> Self {
        match s {
            StudyArg::HomSize => StudyKind::HomSize,
            StudyArg::HomPower => StudyKind::HomPower,
            StudyArg::ClassPower => StudyKind::ClassPower,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub study: StudyArg,
    /// Group size (hom_size) or first-group size.
    #[arg(long, alias = "n")]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    /// Features per observation, or sequence length for class_power.
    #[arg(long)]
    pub length: Option<usize>,
    /// Squared distance between group means (hom_power).
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Connecting branch length relative to the taller tree (class_power).
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<MethodArg>>,
    #[arg(long)]
    pub permutations: Option<usize>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Transition/transversion ratio of the substitution model.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Substitutions per site per unit of tree height.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Stationary A,C,G,T frequencies of the substitution model.
    #[arg(long, value_delimiter = ',')]
    pub freqs: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

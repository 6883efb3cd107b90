use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cascade_core::MechanismTag;

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Correlated noise for private range queries")]
pub struct Cli {
    /// Master seed for every random stream in the run.
    #[arg(long, global = true, env = "CASCADE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output file. Without it results go to stdout and no sidecar is written.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Command {
    /// Draw one noise tree.
    Sample(SampleArgs),
    /// Print σ for a privacy budget.
    Calibrate(CalibrateArgs),
    /// Privatize a data vector.
    Perturb(PerturbArgs),
    /// Estimate error metrics by Monte Carlo.
    Errors(ErrorsArgs),
    /// Time cascade sampling across depths.
    Scaling(ScalingArgs),
    /// Per-level variance of subtree-sum answers.
    Levels(LevelsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeFormat {
    Json,
    Bin,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long, short)]
    pub k: u32,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = TreeFormat::Json)]
    pub format: TreeFormat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationMode {
    Tree,
    Iid,
    General(f64),
}

impl fmt::Display for CalibrationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Tree => f.write_str("tree"),
            Self::Iid => f.write_str("iid"),
            Self::General(d) => write!(f, "general:{d}"),
        }
    }
}

impl Serialize for CalibrationMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for CalibrationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tree" => Ok(Self::Tree),
            "iid" => Ok(Self::Iid),
            _ => {
                let diag = s
                    .strip_prefix("general:")
                    .ok_or_else(|| format!("unknown mode `{s}` (tree, iid, general:<diag>)"))?;
                diag.parse()
                    .map(Self::General)
                    .map_err(|_| format!("bad diagonal `{diag}`"))
            }
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub delta: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value = "tree")]
    pub mode: CalibrationMode,
}

#[derive(Debug, Args, Serialize)]
pub struct PerturbArgs {
    /// CSV with one value per line. Synthetic data is generated when absent.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Length of the synthetic vector.
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value = "correlated")]
    pub mechanism: MechanismTag,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadArg {
    Continuous,
    Nodal,
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct ErrorsArgs {
    /// Mechanisms to compare (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "correlated,iid,btree")]
    pub mechanism: Vec<MechanismTag>,
    #[arg(long, value_enum, default_value_t = WorkloadArg::Continuous)]
    pub workload: WorkloadArg,
    /// Vector lengths (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256,512,1024")]
    pub n: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    /// Ranges sampled per replicate for the continuous workload.
    #[arg(long, default_value_t = 5000)]
    pub queries: usize,
    /// Rows in the random workload.
    #[arg(long, default_value_t = 2500)]
    pub random_rows: usize,
    /// Enumerate every range instead of sampling (depth ≤ 6).
    #[arg(long)]
    pub exhaustive: bool,
    /// Also write a whitespace-separated table with ±0.25 SD bars.
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long, default_value_t = 10)]
    pub k_min: u32,
    #[arg(long, default_value_t = 20)]
    pub k_max: u32,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LevelsArgs {
    #[arg(long, default_value = "correlated")]
    pub mechanism: MechanismTag,
    #[arg(long, short, default_value_t = 5)]
    pub k: u32,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: BudgetArgs,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    /// Also write a whitespace-separated table with ±0.25 SD bars.
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
}

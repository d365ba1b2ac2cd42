use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ssdpp", version, about = "Subgroup-list discovery for numeric targets")]
pub struct Cli {
    /// Cap on worker threads for candidate scoring.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine a subgroup list from a CSV file.
    Mine(MineArgs),
    /// Evaluate a model JSON file against a dataset.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset with planted subgroups.
    Synth(SynthArgs),
    /// Compare miners across datasets, optionally sweeping a parameter.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Ssdpp,
    Topk,
    Seqcover,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ssdpp => "ssdpp",
            Algorithm::Topk => "topk",
            Algorithm::Seqcover => "seqcover",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GainArg {
    Normalized,
    Absolute,
    /// Compare only: run both and emit the side-by-side table.
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Input CSV (header row, comma separated).
    pub input: PathBuf,
    /// Target column name; defaults to the last column.
    #[arg(long)]
    pub target: Option<String>,
    /// Sidecar file with `column=binary|nominal|numeric` lines.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 100)]
    pub beam_width: usize,
    #[arg(long, default_value_t = 5)]
    pub n_cut: usize,
    #[arg(long, default_value_t = 5)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 2)]
    pub min_usage: usize,
    #[arg(long, value_enum, default_value_t = GainArg::Normalized)]
    pub gain: GainArg,
    /// Number of top-k subgroups; defaults to |S| of an SSD++ run.
    #[arg(long)]
    pub k: Option<usize>,
    /// Sequential covering stops below this usage.
    #[arg(long)]
    pub min_coverage: Option<usize>,
    /// Score candidates on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Algorithm::Ssdpp)]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Where to write the model JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Accepted for interface uniformity; mining is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Model JSON written by `mine`.
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    pub rows: usize,
    /// Number of planted subgroups in the preset layout.
    #[arg(long, default_value_t = 3)]
    pub planted: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON planted-data specification replacing the preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// CSV destination; ground truth goes next to it as `<stem>.truth.json`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// One or more input CSV files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Sweep one parameter, e.g. `--sweep beam 25,50,100,200`.
    #[arg(long, num_args = 2, value_names = ["PARAM", "VALUES"])]
    pub sweep: Option<Vec<String>>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

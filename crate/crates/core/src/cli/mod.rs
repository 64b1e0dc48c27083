//! Command-line surface: file formats, persisted state, and the
//! `validate` / `monitor` / `simulate` / `evaluate` commands.
//!
//! Exit status: 0 success without alert, 2 alert raised, 1 error.

mod commands;
mod parse;
mod state;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::eval::{Detector, LabelSource};
use crate::srm::Variant;
use crate::validate::{Method, ZeroPolicy};

pub use parse::{
    parse_bucket_csv, parse_bucket_csv_str, parse_snapshot_jsonl, parse_snapshot_jsonl_str,
    ExperimentSeries,
};
pub use state::PersistedMonitorState;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ALERT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "abguard",
    version,
    about = "Randomization validation and sample ratio mismatch monitoring"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a bucket-count CSV for uniformity.
    Validate(ValidateArgs),
    /// Run sequential SRM monitoring over snapshot JSONL.
    Monitor(MonitorArgs),
    /// Generate labeled benchmark datasets.
    Simulate(SimulateArgs),
    /// Score detectors on a simulated dataset.
    Evaluate(EvaluateArgs),
}

/// `auto` or an explicit error tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Delta(pub Option<f64>);

impl std::str::FromStr for Delta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Delta(None));
        }
        s.parse::<f64>()
            .map(|d| Delta(Some(d)))
            .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
    }
}

#[derive(Debug, Clone, Serialize, Args)]
pub struct ValidateArgs {
    /// CSV with header `bucket,count`.
    pub input: PathBuf,
    /// psi | chi2 | ks | ad
    #[arg(long, default_value = "psi")]
    pub method: Method,
    #[arg(long, default_value_t = crate::validate::DEFAULT_ALPHA, env = "ABGUARD_VALIDATE_ALPHA")]
    pub alpha: f64,
    /// Reference-size multiplier for the PSI test.
    #[arg(long, default_value_t = crate::validate::DEFAULT_K, env = "ABGUARD_K")]
    pub k: u32,
    /// Declared bucket count; absent buckets read as zero.
    #[arg(long)]
    pub buckets: Option<usize>,
    /// infinite | smoothing
    #[arg(long, default_value = "infinite")]
    pub zero_policy: ZeroPolicy,
    /// Minimum total before a verdict (default 10 per bucket).
    #[arg(long)]
    pub min_total: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Args)]
pub struct MonitorArgs {
    /// Snapshot JSONL.
    pub input: PathBuf,
    /// gaussian | exact
    #[arg(long, default_value = "exact")]
    pub variant: Variant,
    #[arg(long, default_value_t = crate::srm::DEFAULT_ALPHA, env = "ABGUARD_SRM_ALPHA")]
    pub alpha: f64,
    #[arg(long, default_value_t = crate::srm::DEFAULT_BETA, env = "ABGUARD_SRM_BETA")]
    pub beta: f64,
    /// Error tolerance, or `auto` for min(0.01, 0.05 * min(p0, 1 - p0)).
    #[arg(long, default_value = "auto", env = "ABGUARD_DELTA")]
    pub delta: Delta,
    #[arg(long, default_value_t = crate::srm::DEFAULT_MIN_TOTAL)]
    pub min_total: u64,
    /// State file to resume from and update.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Monitor each segment as well as the aggregate.
    #[arg(long)]
    pub by_segment: bool,
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SimKind {
    Buckets,
    NoiseSweep,
    SrmSeries,
}

#[derive(Debug, Clone, Serialize, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: SimKind,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20_220_814)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub negatives: usize,
    #[arg(long, default_value_t = 100)]
    pub positives: usize,
    #[arg(long, default_value_t = 100)]
    pub buckets: usize,
    #[arg(long, default_value_t = 3e6)]
    pub mean_total: f64,
    /// Noise level for `buckets`.
    #[arg(long, default_value_t = 4.0)]
    pub lambda: f64,
    /// Noise levels for `noise-sweep`: `a..b` (inclusive, integers) or a comma list.
    #[arg(long, default_value = "0..10")]
    pub lambdas: String,
    #[arg(long, default_value_t = 5)]
    pub max_anomalous: usize,
    #[arg(long, default_value_t = 519)]
    pub series: usize,
    #[arg(long, default_value_t = 29)]
    pub days: u32,
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,
    #[arg(long, default_value_t = 1e2)]
    pub min_volume: f64,
    #[arg(long, default_value_t = 1e5)]
    pub max_volume: f64,
    #[arg(long, default_value_t = 0.5)]
    pub null_fraction: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub min_shift: f64,
    #[arg(long, default_value_t = 0.03)]
    pub max_shift: f64,
}

#[derive(Debug, Clone, Serialize, Args)]
pub struct EvaluateArgs {
    /// `manifest.json` written by `simulate`.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "chi2,ad,ks,psi")]
    pub methods: Vec<Method>,
    /// Significance level for the bucket validators.
    #[arg(long, default_value_t = 0.1, env = "ABGUARD_EVAL_ALPHA")]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Also sweep the PSI multiplier, e.g. `1..7`.
    #[arg(long)]
    pub k_sweep: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "t-test,chi2,sprt,sprt-exact")]
    pub detectors: Vec<Detector>,
    #[arg(long, default_value_t = crate::srm::DEFAULT_ALPHA, env = "ABGUARD_SRM_ALPHA")]
    pub srm_alpha: f64,
    #[arg(long, default_value_t = crate::srm::DEFAULT_BETA, env = "ABGUARD_SRM_BETA")]
    pub srm_beta: f64,
    #[arg(long, default_value = "auto", env = "ABGUARD_DELTA")]
    pub delta: Delta,
    /// Significance level for the fixed-horizon SRM baselines.
    #[arg(long, default_value_t = 0.01)]
    pub baseline_alpha: f64,
    #[arg(long, default_value_t = crate::srm::DEFAULT_MIN_TOTAL)]
    pub min_total: u64,
    /// rule | truth
    #[arg(long, default_value = "rule")]
    pub label_source: LabelSource,
    #[arg(long, default_value_t = 4)]
    pub size_bins: usize,
    /// Write the JSON report here.
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// Write recall-by-size CSV here (SRM suites only).
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

/// Parse arguments, run the command, and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Monitor(a) => commands::monitor(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

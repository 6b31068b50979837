//! `netscale` command-line front end.
//!
//! * `generate` writes a synthetic packet stream plus an `.internal` sidecar.
//! * `analyze` evaluates the window hierarchy of one or more streams and
//!   writes per-level quantity and distribution tables.
//! * `scaling` reads an `analyze` output directory and fits scaling laws.

mod analyze;
mod generate;
mod scaling;
pub mod tables;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use analyze::cmd_analyze;
pub use generate::cmd_generate;
pub use scaling::cmd_scaling;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
        }
    }
}

pub fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub fn usage_err(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "netscale", version, about = "Multi-temporal traffic-matrix analysis of packet streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic packet stream
    Generate(GenerateArgs),
    /// Compute per-window quantities and distributions at every hierarchy level
    Analyze(AnalyzeArgs),
    /// Fit scaling exponents from `analyze` output
    Scaling(ScalingArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Tsv,
    Json,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Tsv => "tsv",
            TableFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Binary,
    Csv,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// isolated-links, single-link, internal-supernode, external-supernode or zipf
    #[arg(long)]
    pub topology: String,
    #[arg(long)]
    pub packets: u64,
    /// Alternate external->internal and internal->external packets
    #[arg(long)]
    pub balanced: bool,
    /// Fixed supernode peer pool (default: a fresh peer per packet pair)
    #[arg(long)]
    pub peers: Option<u64>,
    #[arg(long = "zipf-s", default_value_t = 1.0)]
    pub zipf_s: f64,
    #[arg(long, default_value_t = netscale_core::synth::DEFAULT_ZIPF_POPULATION)]
    pub population: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Output stream format
    #[arg(long, value_enum, default_value_t = InputFormat::Binary)]
    pub format: InputFormat,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Stream files, read back to back in the given order
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Override format detection (`.csv`/`.txt` are CSV, anything else binary)
    #[arg(long = "input-format", value_enum)]
    pub input_format: Option<InputFormat>,
    /// Packets per base window (power of two)
    #[arg(long = "base-window")]
    pub base_window: u64,
    #[arg(long, default_value_t = 1)]
    pub levels: u8,
    /// Base windows to skip before the first analyzed window
    #[arg(long = "start-index", default_value_t = 0)]
    pub start_index: u64,
    /// Internal ID set: a file, or ids / lo-hi ranges / IPv4 CIDRs
    #[arg(long)]
    pub internal: Option<String>,
    /// Restrict to one quadrant: ei, ie, ii or ee (needs --internal)
    #[arg(long)]
    pub quadrant: Option<String>,
    /// 128-bit hex key; relabels IDs before analysis
    #[arg(long = "anonymize-key")]
    pub anonymize_key: Option<String>,
    #[arg(long = "allow-src")]
    pub allow_src: Option<String>,
    #[arg(long = "deny-src")]
    pub deny_src: Option<String>,
    #[arg(long = "allow-dst")]
    pub allow_dst: Option<String>,
    #[arg(long = "deny-dst")]
    pub deny_dst: Option<String>,
    /// Degree distributions to tabulate (comma separated, or `all` / `none`)
    #[arg(long, default_value = "all")]
    pub distributions: String,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = TableFormat::Tsv)]
    pub format: TableFormat,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    /// Directory written by `analyze`
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory (default: the input directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Tsv)]
    pub format: TableFormat,
    /// RMS log2 residual above which no scaling relation is reported
    #[arg(long, default_value_t = netscale_core::scaling::DEFAULT_RESIDUAL_THRESHOLD)]
    pub threshold: f64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Scaling(args) => cmd_scaling(&args),
    }
}

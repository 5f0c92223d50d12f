use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

/// Marks an error as the caller's fault (exit status 2).
#[derive(Debug)]
pub struct BadInput(String);

impl BadInput {
    pub fn err(msg: impl Into<String>) -> anyhow::Error {
        anyhow::Error::new(BadInput(msg.into()))
    }
}

impl fmt::Display for BadInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for BadInput {}

#[derive(Parser)]
#[command(name = "tcguard", version, about = "Detect and truncate DNS cache-poisoning responses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run detection over a capture.
    Analyze(AnalyzeArgs),
    /// Write a synthetic scenario as a capture plus labels.
    Generate(GenerateArgs),
    /// Evaluate a scenario over a grid of sketch dimensions.
    Sweep(SweepArgs),
    /// Print the memory/error/inference comparison of the estimators.
    Costmodel(CostmodelArgs),
}

#[derive(Args, Debug, Default)]
pub struct EngineFlags {
    /// Flag a name once its count exceeds this.
    #[arg(long)]
    pub tau: Option<u64>,
    /// Check the threshold on every N-th packet.
    #[arg(long)]
    pub interval: Option<u64>,
    /// Tumbling-window length in seconds.
    #[arg(long)]
    pub window: Option<f64>,
    /// Sketch depth (hash functions).
    #[arg(long = "cms-d")]
    pub cms_d: Option<usize>,
    /// Sketch width (counters per row).
    #[arg(long = "cms-w")]
    pub cms_w: Option<usize>,
    /// Enabled rules, e.g. `r1,r3`.
    #[arg(long)]
    pub rules: Option<String>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub pcap: Option<PathBuf>,
    /// Address of the protected resolver.
    #[arg(long)]
    pub resolver: Option<String>,
    /// Sidecar `packet_index,label` CSV for ASR and FP.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineFlags,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_verdicts: Option<PathBuf>,
    /// Metrics JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out_metrics: Option<PathBuf>,
    #[arg(long)]
    pub out_metrics_csv: Option<PathBuf>,
    /// Capture of what would reach the resolver after mitigation.
    #[arg(long)]
    pub emit_pcap: Option<PathBuf>,
    /// `key = value` file mirroring the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ScenarioFlags {
    /// One of s, frag, oob, benign, interleaved.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub attack_count: Option<usize>,
    #[arg(long)]
    pub noise_count: Option<usize>,
    /// Ranked domain list for benign names.
    #[arg(long)]
    pub domains: Option<PathBuf>,
    /// Span of the spoofed-response burst in milliseconds.
    #[arg(long)]
    pub rate_ms: Option<u64>,
    /// Span of the benign traffic in milliseconds.
    #[arg(long)]
    pub noise_window_ms: Option<u64>,
    /// uniform or poisson.
    #[arg(long)]
    pub arrival: Option<String>,
    /// additional-record, tld-delegation or compliant.
    #[arg(long)]
    pub oob_variant: Option<String>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub scenario: ScenarioFlags,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioFlags,
    #[command(flatten)]
    pub engine: EngineFlags,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated sketch depths.
    #[arg(long)]
    pub d_grid: Option<String>,
    /// Comma-separated sketch widths.
    #[arg(long)]
    pub w_grid: Option<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// CSV path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CostmodelArgs {
    /// CSV path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Generate(a) => commands::generate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Costmodel(a) => commands::costmodel(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<BadInput>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

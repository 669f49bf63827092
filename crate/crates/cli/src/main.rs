//! `perfcausal`: causal analysis of configurable-system performance data.

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "perfcausal", version, about = "Causal discovery and inference for configurable-system performance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a causal graph from measurements.
    Discover(DiscoverArgs),
    /// Decide whether an option's effect is identifiable and derive its estimand.
    Identify(IdentifyArgs),
    /// Transport an effect from a source to a target environment.
    Transport(TransportArgs),
    /// Check recoverability of conditionals under selection bias.
    Recover(RecoverArgs),
    /// Sample a synthetic configurable system and simulate measurements.
    Simulate(SimulateArgs),
    /// Test d-/m-separation in a graph.
    Dsep(DsepArgs),
    /// Summarize a performance metric, optionally adjusting for confounders.
    Estimate(EstimateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    Pc,
    Fci,
}

#[derive(Debug, Args)]
struct DiscoverArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long, value_enum, default_value = "pc")]
    algo: Algo,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Largest conditioning set tried.
    #[arg(long)]
    max_cond_size: Option<usize>,
    /// Use the order-dependent skeleton search instead of the stable one.
    #[arg(long)]
    no_stable: bool,
    /// Background knowledge file; replaces the option/performance tiers
    /// derived from the metadata.
    #[arg(long)]
    bk: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Separating sets and diagnostics as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IdentifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    treatment: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    outcome: Vec<String>,
    /// Conditioning variables, optionally fixed to a level: `A=1,B`.
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
    /// Estimate the identified effect from this dataset.
    #[arg(long, requires = "meta")]
    data: Option<PathBuf>,
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RelationArg {
    Causal,
    Statistical,
}

#[derive(Debug, Args)]
struct TransportArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Variables whose mechanisms may differ between the environments.
    #[arg(long, value_delimiter = ',')]
    s_nodes: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    treatment: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    outcome: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
    #[arg(long, value_enum, default_value = "causal")]
    relation: RelationArg,
    /// Randomized-experiment data from the source environment (treatment
    /// set by intervention).
    #[arg(long, requires = "meta")]
    source_data: Option<PathBuf>,
    /// Observational data from the target environment.
    #[arg(long, requires = "meta")]
    target_data: Option<PathBuf>,
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Name of the selection node in the graph.
    #[arg(long)]
    selection: String,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<String>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// SCM spec (TOML); its `seed` field is replaced by `--seed`.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Metadata for the CSV; defaults to `<out>.meta.toml`.
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    truth: PathBuf,
    /// Selection mechanism (TOML) for biased sampling.
    #[arg(long)]
    selection: Option<PathBuf>,
    /// Sampled SCM as JSON.
    #[arg(long)]
    scm: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DsepArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long)]
    outcome: String,
    /// Conditioning assignment `A=1,B=on`; with `--treatment`, bare names
    /// are conditioning variables summarized at every level.
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    treatment: Vec<String>,
    /// Adjustment set for `--treatment`.
    #[arg(long, value_delimiter = ',', requires = "treatment")]
    adjust: Vec<String>,
    /// Pseudo-counts added to each outcome level (discrete outcomes).
    #[arg(long, default_value_t = 0.0)]
    smoothing: f64,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Discover(a) => commands::discover(a),
        Command::Identify(a) => commands::identify(a),
        Command::Transport(a) => commands::transport(a),
        Command::Recover(a) => commands::recover(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Dsep(a) => commands::dsep(a),
        Command::Estimate(a) => commands::estimate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

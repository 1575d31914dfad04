//! Command-line front end for the selection engine: builds value and
//! variance tables, runs deterministic simulation campaigns, and emits
//! verification reports.
//!
//! Every run is reproducible: randomized commands require an explicit
//! `--seed`, batches assign one counter-based stream per replicate, and
//! the environment variable `MONOSEQ_THREADS` caps the worker pool
//! without affecting any output byte.

mod app;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use app::{CommandKind, OutputFormat, RunConfig, DEFAULT_MAX_ENTRIES};

#[derive(Parser)]
#[command(
    name = "monoseq",
    version,
    about = "Optimal online selection of a monotone subsequence: exact tables, \
             deterministic simulation, statistical verification",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    /// Read the full run configuration from one JSON document instead of flags
    #[arg(long, value_name = "FILE")]
    json_config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the value/threshold/derivative table and export it
    Table(TableArgs),
    /// Run a batch of episodes; batch to file, summary to stdout
    Simulate(SimulateArgs),
    /// Normalized-statistic report: KS distances and histogram for one batch
    Clt(CltArgs),
    /// Mean and variance envelope report over a list of horizons
    Bounds(BoundsArgs),
    /// Structural property report for one table pair
    Properties(PropertiesArgs),
    /// Batch with a Poisson number of arrivals, compared against the fixed horizon
    Poisson(PoissonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Grid nodes for the dynamic program; 2^m + 1 keeps nodes exact
    #[arg(long = "grid", default_value_t = monoseq::DEFAULT_GRID_POINTS)]
    grid: usize,

    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Refuse table builds with more than this many entries (horizon x grid)
    #[arg(long, default_value_t = DEFAULT_MAX_ENTRIES)]
    max_entries: u64,
}

#[derive(Args)]
struct TableArgs {
    /// Horizon: number of observations
    #[arg(long)]
    n: usize,

    /// Merge the conditional-variance table into the export
    #[arg(long)]
    with_variance: bool,

    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Horizon: number of observations per episode
    #[arg(long)]
    n: usize,

    /// Number of replicate episodes
    #[arg(long)]
    reps: usize,

    /// Master seed; replicate r draws from stream (seed, r)
    #[arg(long)]
    seed: u64,

    /// Add each episode's summed conditional variance as a second column
    #[arg(long)]
    with_series: bool,

    /// Batch output file
    #[arg(long, default_value = app::DEFAULT_BATCH_PATH)]
    out: PathBuf,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CltArgs {
    /// Horizon: number of observations per episode
    #[arg(long)]
    n: usize,

    /// Number of replicate episodes
    #[arg(long)]
    reps: usize,

    /// Master seed; replicate r draws from stream (seed, r)
    #[arg(long)]
    seed: u64,

    /// Report file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write per-replicate normalized statistics to this file
    #[arg(long)]
    samples_out: Option<PathBuf>,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct BoundsArgs {
    /// Comma-separated horizons to report on
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    n_list: Vec<usize>,

    /// Exit with status 2 if any bound fails
    #[arg(long)]
    strict: bool,

    /// Report file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct PropertiesArgs {
    /// Horizon the property table is built for
    #[arg(long)]
    n: usize,

    /// Exit with status 2 if any property fails
    #[arg(long)]
    strict: bool,

    /// Report file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct PoissonArgs {
    /// Policy horizon the thresholds are built for
    #[arg(long)]
    n: usize,

    /// Mean of the Poisson arrival count
    #[arg(long)]
    nu: f64,

    /// Number of replicate episodes
    #[arg(long)]
    reps: usize,

    /// Master seed; replicate r draws from stream (seed, r)
    #[arg(long)]
    seed: u64,

    /// Batch output file; omitted means no batch file, summary only
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    common: CommonArgs,
}

/// A config with nothing set beyond the command and the shared flags.
fn base(command: CommandKind, common: &CommonArgs) -> RunConfig {
    RunConfig {
        command,
        n: None,
        grid_points: common.grid,
        reps: None,
        seed: None,
        output_path: None,
        format: common.format,
        with_variance: false,
        with_series: false,
        samples_path: None,
        n_list: Vec::new(),
        nu: None,
        strict: false,
        max_entries: common.max_entries,
    }
}

fn build_config(cli: Cli) -> Result<RunConfig, String> {
    if let Some(path) = cli.json_config {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        return serde_json::from_str(&text)
            .map_err(|e| format!("bad config {}: {e}", path.display()));
    }
    let Some(command) = cli.command else {
        return Err("a subcommand or --json-config is required; see --help".into());
    };
    Ok(match command {
        Command::Table(a) => RunConfig {
            n: Some(a.n),
            with_variance: a.with_variance,
            output_path: a.out,
            ..base(CommandKind::Table, &a.common)
        },
        Command::Simulate(a) => RunConfig {
            n: Some(a.n),
            reps: Some(a.reps),
            seed: Some(a.seed),
            with_series: a.with_series,
            output_path: Some(a.out),
            ..base(CommandKind::Simulate, &a.common)
        },
        Command::Clt(a) => RunConfig {
            n: Some(a.n),
            reps: Some(a.reps),
            seed: Some(a.seed),
            output_path: a.out,
            samples_path: a.samples_out,
            ..base(CommandKind::Clt, &a.common)
        },
        Command::Bounds(a) => RunConfig {
            n_list: a.n_list,
            strict: a.strict,
            output_path: a.out,
            ..base(CommandKind::Bounds, &a.common)
        },
        Command::Properties(a) => RunConfig {
            n: Some(a.n),
            strict: a.strict,
            output_path: a.out,
            ..base(CommandKind::Properties, &a.common)
        },
        Command::Poisson(a) => RunConfig {
            n: Some(a.n),
            nu: Some(a.nu),
            reps: Some(a.reps),
            seed: Some(a.seed),
            output_path: a.out,
            ..base(CommandKind::Poisson, &a.common)
        },
    })
}

/// Apply MONOSEQ_THREADS before any parallel work; 0 or unset means let
/// the pool size itself.  Thread count never changes output bytes, only
/// wall time.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MONOSEQ_THREADS") else {
        return Ok(());
    };
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(());
    }
    let count: usize = raw
        .parse()
        .map_err(|_| format!("MONOSEQ_THREADS must be a non-negative integer, got {raw:?}"))?;
    if count == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(count)
        .build_global()
        .map_err(|e| format!("cannot size the worker pool: {e}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(msg) = configure_threads() {
        eprintln!("monoseq: {msg}");
        return ExitCode::from(1);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are requests, not mistakes
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match build_config(cli) {
        Ok(config) => config,
        Err(msg) => {
            eprintln!("monoseq: {msg}");
            return ExitCode::from(1);
        }
    };
    match app::run(&config) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("monoseq: {msg}");
            ExitCode::from(1)
        }
    }
}

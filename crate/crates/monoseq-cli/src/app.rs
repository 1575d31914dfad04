//! Run configuration and command dispatch.
//!
//! Both entry points funnel into [`run`]: command-line flags are folded
//! into a [`RunConfig`], and `--json-config` deserializes the same
//! structure from a single document, so any run can be replayed from
//! either form.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use monoseq::export::{
    write_batch, write_bound_report_csv, write_histogram_csv, write_merged_table_csv,
    write_property_report_csv, write_run_report_json, write_value_table_csv,
    write_value_table_json,
};
use monoseq::{
    bound_report, build_value_table, build_variance_table, centered_statistic,
    ks_to_standard_normal, property_report, simulate_batch, simulate_batch_with_series,
    simulate_poisson_batch, summarize, value_at, variance_at, GridSpec, MonteCarloSummary,
    RunReport, ValueTable,
};

/// Default cap on table size, measured in horizon times grid points.
pub const DEFAULT_MAX_ENTRIES: u64 = 1 << 31;

/// Where `simulate` puts its batch when no output path is given; the
/// command always writes the batch to a file so the stdout summary stays
/// readable.
pub const DEFAULT_BATCH_PATH: &str = "monoseq-batch.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Table,
    Simulate,
    Clt,
    Bounds,
    Properties,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// One complete run description.
///
/// Fields beyond the command itself are only meaningful for some commands;
/// [`RunConfig::validate`] enforces the per-command requirements before
/// any table is built.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Horizon; required by every command except `bounds`.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Replicates; required by the randomized commands.
    #[serde(default)]
    pub reps: Option<usize>,
    /// Master seed; required by the randomized commands, never implicit.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// `table`: merge the conditional-variance table into the export.
    #[serde(default)]
    pub with_variance: bool,
    /// `simulate`: add each episode's summed conditional variance as a
    /// second output column.
    #[serde(default)]
    pub with_series: bool,
    /// `clt`: also write the per-replicate normalized statistics here.
    #[serde(default)]
    pub samples_path: Option<PathBuf>,
    /// `bounds`: horizons to report on.
    #[serde(default)]
    pub n_list: Vec<usize>,
    /// `poisson`: mean number of arrivals.
    #[serde(default)]
    pub nu: Option<f64>,
    /// `bounds`/`properties`: exit 2 if any assertion fails.
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "default_max_entries")]
    pub max_entries: u64,
}

fn default_grid_points() -> usize {
    monoseq::DEFAULT_GRID_POINTS
}

fn default_max_entries() -> u64 {
    DEFAULT_MAX_ENTRIES
}

impl RunConfig {
    /// The horizon this run builds tables for.
    fn horizon(&self) -> usize {
        match self.command {
            CommandKind::Bounds => self.n_list.iter().copied().max().unwrap_or(0),
            _ => self.n.unwrap_or(0),
        }
    }

    fn is_randomized(&self) -> bool {
        matches!(
            self.command,
            CommandKind::Simulate | CommandKind::Clt | CommandKind::Poisson
        )
    }

    /// Check per-command requirements without doing any work.
    pub fn validate(&self) -> Result<(), String> {
        match self.command {
            CommandKind::Bounds => {
                if self.n_list.is_empty() {
                    return Err("bounds needs --n-list with at least one horizon".into());
                }
                if self.n_list.contains(&0) {
                    return Err("every horizon in --n-list must be at least 1".into());
                }
            }
            _ => {
                if self.n.is_none_or(|n| n == 0) {
                    return Err("--n must be at least 1".into());
                }
            }
        }
        if self.is_randomized() {
            if self.seed.is_none() {
                return Err(
                    "randomized commands need an explicit --seed; there is no implicit one".into(),
                );
            }
            if self.reps.is_none_or(|r| r < 2) {
                return Err("--reps must be at least 2 so the summary has a variance".into());
            }
        }
        if self.command == CommandKind::Poisson {
            let nu = self.nu.ok_or("poisson needs --nu")?;
            if !nu.is_finite() || nu <= 0.0 {
                return Err(format!("--nu must be a positive finite number, got {nu}"));
            }
        }
        let entries = self.horizon() as u64 * self.grid_points as u64;
        if entries > self.max_entries {
            return Err(format!(
                "table of {} entries (n = {}, grid = {}) exceeds the budget of {}; \
                 raise --max-entries to override",
                entries,
                self.horizon(),
                self.grid_points,
                self.max_entries
            ));
        }
        Ok(())
    }
}

fn fail(e: monoseq::Error) -> String {
    e.to_string()
}

fn open_out(path: &Path) -> Result<BufWriter<File>, String> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Run a writer against the output path, falling back to stdout.
fn write_artifact<F>(path: Option<&Path>, writer: F) -> Result<(), String>
where
    F: FnOnce(&mut dyn Write) -> monoseq::Result<()>,
{
    match path {
        Some(p) => {
            let mut out = open_out(p)?;
            writer(&mut out).map_err(fail)?;
            out.flush()
                .map_err(|e| format!("cannot write {}: {e}", p.display()))
        }
        None => {
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            writer(&mut out).map_err(fail)?;
            out.flush()
                .map_err(|e| format!("cannot write standard output: {e}"))
        }
    }
}

/// Execute one validated configuration.  Returns the process exit code:
/// 0 on success, 2 when `strict` is set and an assertion failed.  Argument
/// and I/O problems come back as `Err` and exit with code 1.
pub fn run(config: &RunConfig) -> Result<u8, String> {
    config.validate()?;
    let grid = GridSpec::new(config.grid_points).map_err(fail)?;
    match config.command {
        CommandKind::Table => run_table(config, grid),
        CommandKind::Simulate => run_simulate(config, grid),
        CommandKind::Clt => run_clt(config, grid),
        CommandKind::Bounds => run_bounds(config, grid),
        CommandKind::Properties => run_properties(config, grid),
        CommandKind::Poisson => run_poisson(config, grid),
    }
}

fn run_table(config: &RunConfig, grid: GridSpec) -> Result<u8, String> {
    let n = config.horizon();
    let vt = build_value_table(n, grid).map_err(fail)?;
    let wt = config.with_variance.then(|| build_variance_table(&vt));
    write_artifact(config.output_path.as_deref(), |out| match config.format {
        OutputFormat::Csv => match &wt {
            Some(wt) => write_merged_table_csv(&vt, wt, out),
            None => write_value_table_csv(&vt, out),
        },
        OutputFormat::Json => write_value_table_json(&vt, wt.as_ref(), out),
    })?;
    if let Some(p) = &config.output_path {
        println!(
            "table: n={} grid={} -> {}",
            n,
            config.grid_points,
            p.display()
        );
    }
    Ok(0)
}

/// Moments shared by every batch summary line.
fn base_report(summary: &MonteCarloSummary, vt: &ValueTable) -> Result<RunReport, String> {
    Ok(RunReport {
        n: summary.n,
        reps: Some(summary.reps),
        mean: Some(summary.mean),
        stderr: Some(summary.stderr_mean),
        variance: Some(summary.variance),
        v_table: Some(value_at(vt, summary.n, 0.0).map_err(fail)?),
        ..RunReport::default()
    })
}

fn print_report(report: &RunReport) -> Result<(), String> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    write_run_report_json(report, &mut out).map_err(fail)?;
    out.flush()
        .map_err(|e| format!("cannot write standard output: {e}"))
}

fn run_simulate(config: &RunConfig, grid: GridSpec) -> Result<u8, String> {
    let n = config.horizon();
    let reps = config.reps.expect("validated");
    let seed = config.seed.expect("validated");
    let vt = build_value_table(n, grid).map_err(fail)?;
    let (lengths, series, w_table) = if config.with_series {
        let wt = build_variance_table(&vt);
        let (lengths, series) = simulate_batch_with_series(&vt, &wt, reps, seed).map_err(fail)?;
        let w0 = variance_at(&wt, n, 0.0).map_err(fail)?;
        (lengths, Some(series), Some(w0))
    } else {
        (simulate_batch(&vt, reps, seed).map_err(fail)?, None, None)
    };

    let batch_path = config
        .output_path
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_BATCH_PATH));
    let mut out = open_out(&batch_path)?;
    write_batch(&lengths, series.as_deref(), &mut out).map_err(fail)?;
    out.flush()
        .map_err(|e| format!("cannot write {}: {e}", batch_path.display()))?;

    let summary = summarize(&lengths, n).map_err(fail)?;
    match config.format {
        OutputFormat::Csv => println!(
            "simulate: n={} reps={} seed={} mean={:.9} stderr={:.3e} variance={:.9} \
             table_value={:.9} batch={}",
            n,
            reps,
            seed,
            summary.mean,
            summary.stderr_mean,
            summary.variance,
            value_at(&vt, n, 0.0).map_err(fail)?,
            batch_path.display()
        ),
        OutputFormat::Json => {
            let mut report = base_report(&summary, &vt)?;
            report.w_table = w_table;
            report.ks = Some(summary.ks_distance);
            print_report(&report)?;
        }
    }
    Ok(0)
}

fn run_clt(config: &RunConfig, grid: GridSpec) -> Result<u8, String> {
    let n = config.horizon();
    let reps = config.reps.expect("validated");
    let seed = config.seed.expect("validated");
    let vt = build_value_table(n, grid).map_err(fail)?;
    let lengths = simulate_batch(&vt, reps, seed).map_err(fail)?;
    let summary = summarize(&lengths, n).map_err(fail)?;
    let v0 = value_at(&vt, n, 0.0).map_err(fail)?;
    // Secondary diagnostic: the same statistic recentered at the table
    // mean instead of the limit centering.
    let zs_centered: Vec<f64> = lengths
        .iter()
        .map(|&l| centered_statistic(l, v0, n))
        .collect();
    let ks_centered = ks_to_standard_normal(&zs_centered).map_err(fail)?;

    if let Some(path) = &config.samples_path {
        let mut out = open_out(path)?;
        let mut write = || -> io::Result<()> {
            writeln!(out, "L,z,z_centered")?;
            for (i, &l) in lengths.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{}",
                    l,
                    monoseq::clt_statistic(l, n),
                    zs_centered[i]
                )?;
            }
            out.flush()
        };
        write().map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }

    match config.format {
        OutputFormat::Csv => {
            write_artifact(config.output_path.as_deref(), |out| {
                write_histogram_csv(&summary.histogram, out)
            })?;
            println!(
                "clt: n={} reps={} seed={} mean={:.9} stderr={:.3e} ks={:.6} ks_centered={:.6}",
                n, reps, seed, summary.mean, summary.stderr_mean, summary.ks_distance, ks_centered
            );
        }
        OutputFormat::Json => {
            let mut report = base_report(&summary, &vt)?;
            report.ks = Some(summary.ks_distance);
            report.ks_alt_centering = Some(ks_centered);
            report.histogram = Some(summary.histogram.clone());
            match &config.output_path {
                Some(_) => {
                    write_artifact(config.output_path.as_deref(), |out| {
                        write_run_report_json(&report, out)
                    })?;
                    println!(
                        "clt: n={} reps={} seed={} ks={:.6} ks_centered={:.6}",
                        n, reps, seed, summary.ks_distance, ks_centered
                    );
                }
                None => print_report(&report)?,
            }
        }
    }
    Ok(0)
}

fn run_bounds(config: &RunConfig, grid: GridSpec) -> Result<u8, String> {
    let vt = build_value_table(config.horizon(), grid).map_err(fail)?;
    let wt = build_variance_table(&vt);
    let report = bound_report(&vt, &wt, &config.n_list).map_err(fail)?;
    let all_pass = report.all_pass();
    match config.format {
        OutputFormat::Csv => {
            write_artifact(config.output_path.as_deref(), |out| {
                write_bound_report_csv(&report, out)
            })?;
        }
        OutputFormat::Json => {
            let doc = RunReport {
                n: config.horizon(),
                bounds: Some(report.clone()),
                ..RunReport::default()
            };
            write_artifact(config.output_path.as_deref(), |out| {
                write_run_report_json(&doc, out)
            })?;
        }
    }
    if config.output_path.is_some() {
        let passed = report
            .rows
            .iter()
            .filter(|r| r.mean_pass && r.variance_pass)
            .count();
        println!("bounds: {}/{} rows pass", passed, report.rows.len());
    }
    Ok(if config.strict && !all_pass { 2 } else { 0 })
}

fn run_properties(config: &RunConfig, grid: GridSpec) -> Result<u8, String> {
    let vt = build_value_table(config.horizon(), grid).map_err(fail)?;
    let wt = build_variance_table(&vt);
    let report = property_report(&vt, &wt).map_err(fail)?;
    let all_pass = report.iter().all(|r| r.pass);
    match config.format {
        OutputFormat::Csv => {
            write_artifact(config.output_path.as_deref(), |out| {
                write_property_report_csv(&report, out)
            })?;
        }
        OutputFormat::Json => {
            let doc = RunReport {
                n: config.horizon(),
                properties: Some(report.clone()),
                ..RunReport::default()
            };
            write_artifact(config.output_path.as_deref(), |out| {
                write_run_report_json(&doc, out)
            })?;
        }
    }
    if config.output_path.is_some() {
        let passed = report.iter().filter(|r| r.pass).count();
        println!("properties: {}/{} pass", passed, report.len());
    }
    Ok(if config.strict && !all_pass { 2 } else { 0 })
}

fn run_poisson(config: &RunConfig, grid: GridSpec) -> Result<u8, String> {
    let n = config.horizon();
    let reps = config.reps.expect("validated");
    let seed = config.seed.expect("validated");
    let nu = config.nu.expect("validated");
    let vt = build_value_table(n, grid).map_err(fail)?;
    let lengths = simulate_poisson_batch(&vt, nu, reps, seed).map_err(fail)?;
    if let Some(path) = &config.output_path {
        let mut out = open_out(path)?;
        write_batch(&lengths, None, &mut out).map_err(fail)?;
        out.flush()
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    let summary = summarize(&lengths, n).map_err(fail)?;
    let v0 = value_at(&vt, n, 0.0).map_err(fail)?;
    // Random arrival counts cannot beat the fixed-horizon value, so the
    // batch mean should sit at or below v_n(0) up to noise.
    let within = summary.mean <= v0 + 3.0 * summary.stderr_mean;
    match config.format {
        OutputFormat::Csv => println!(
            "poisson: n={} nu={} reps={} seed={} mean={:.9} stderr={:.3e} \
             fixed_horizon_value={:.9} mean_at_or_below_value={}",
            n, nu, reps, seed, summary.mean, summary.stderr_mean, v0, within
        ),
        OutputFormat::Json => print_report(&base_report(&summary, &vt)?)?,
    }
    Ok(0)
}

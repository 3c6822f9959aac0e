//! Command-line front end over a JSON experiment config.
//!
//! ```text
//! aitsde <verb> [options] <config.json>
//! ```
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 bad config.

mod svg;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use thiserror::Error;

use crate::analysis::{tau_for_confidence, PositivityBoundInputs};
use crate::harness::{
    write_convergence_csv, write_moments_csv, write_positivity_csv, write_rates_csv, CsvMeta, ExperimentConfig,
    HarnessError, Runner,
};
use crate::model::ModelParams;

pub use svg::{emit_loglog_svg, render_loglog_svg};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::ConfigInvalid(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "aitsde", version, about = "Positivity-preserving schemes for the Ait-Sahalia model")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Print the regime, lambda and admissible moment orders.
    CheckParams {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Write trajectories of every scheme at the first step size to paths.csv.
    Simulate(RunArgs),
    /// Strong errors and fitted rates: convergence.csv, rates.csv, convergence.svg.
    Convergence(RunArgs),
    /// Timed strong errors: efficiency.csv, efficiency.svg.
    Efficiency(RunArgs),
    /// Negative-proposal and backstop counts: positivity.csv.
    Positivity(RunArgs),
    /// Sample moments of Y over time: moments.csv.
    Moments {
        #[command(flatten)]
        run: RunArgs,
        /// Moment orders, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,4")]
        orders: Vec<f64>,
    },
    /// Largest step size whose survival bound is at least 1 - epsilon.
    TauEps {
        /// Model parameters are taken from this config; the non-critical set if omitted.
        config: Option<PathBuf>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        m1: f64,
        #[arg(long)]
        m2: f64,
        /// Defaults to the config horizon, or 1.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override any config field, e.g. `model.theta=2` or `taus=[0.0078125,0.00390625]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// One stderr line per (scheme, tau).
    #[arg(short, long)]
    verbose: bool,
}

/// Parses `argv` (including the program name), runs the verb and returns
/// the process exit code. Diagnostics go to stderr.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    parse_and_dispatch_to(argv, &mut stdout.lock())
}

/// As [`parse_and_dispatch`], with normal output sent to `out`.
pub fn parse_and_dispatch_to<I, T, W>(argv: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.verb, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("aitsde: {e}");
            e.exit_code()
        }
    }
}

fn dispatch<W: Write>(verb: Verb, out: &mut W) -> Result<(), CliError> {
    match verb {
        Verb::CheckParams { config, set } => {
            let cfg = load_config(&config, &set)?;
            check_params(&cfg.model, out)
        }
        Verb::Simulate(args) => {
            let (cfg, runner) = prepare(&args)?;
            let paths = runner.run_sample_paths(&cfg)?;
            let file = create(&cfg.output_dir, "paths.csv")?;
            write_paths_csv(file, &CsvMeta::from_config(&cfg), &paths)?;
            writeln!(out, "wrote {}", cfg.output_dir.join("paths.csv").display())?;
            Ok(())
        }
        Verb::Convergence(args) => {
            let (cfg, runner) = prepare(&args)?;
            let report = runner.run_convergence(&cfg)?;
            let meta = CsvMeta::from_config(&cfg);
            write_convergence_csv(create(&cfg.output_dir, "convergence.csv")?, &meta, &report)?;
            write_rates_csv(create(&cfg.output_dir, "rates.csv")?, &meta, &report)?;
            emit_loglog_svg(&report.rows, &cfg.output_dir.join("convergence.svg"))?;
            for (scheme, fit) in &report.rates {
                writeln!(out, "{scheme}: slope {:.4} (r^2 {:.4})", fit.slope, fit.r_squared)?;
            }
            Ok(())
        }
        Verb::Efficiency(args) => {
            let (cfg, runner) = prepare(&args)?;
            let report = runner.run_efficiency(&cfg)?;
            let meta = CsvMeta::from_config(&cfg);
            write_convergence_csv(create(&cfg.output_dir, "efficiency.csv")?, &meta, &report)?;
            emit_loglog_svg(&report.rows, &cfg.output_dir.join("efficiency.svg"))?;
            for r in &report.rows {
                writeln!(out, "{} tau={}: rms {:.3e} in {:.3}s", r.scheme, r.tau, r.rms_error_x, r.wall_time_s)?;
            }
            Ok(())
        }
        Verb::Positivity(args) => {
            let (cfg, runner) = prepare(&args)?;
            let rows = runner.run_positivity_census(&cfg)?;
            write_positivity_csv(create(&cfg.output_dir, "positivity.csv")?, &CsvMeta::from_config(&cfg), &rows)?;
            for r in &rows {
                writeln!(
                    out,
                    "{} tau={}: {} negative proposals, {} backstops in {} steps",
                    r.scheme, r.tau, r.negative_proposals, r.backstop_invocations, r.total_steps
                )?;
            }
            Ok(())
        }
        Verb::Moments { run, orders } => {
            let (cfg, runner) = prepare(&run)?;
            let report = runner.run_moment_tracking(&cfg, &orders)?;
            write_moments_csv(create(&cfg.output_dir, "moments.csv")?, &CsvMeta::from_config(&cfg), &report)?;
            for (order, msg) in report.warnings() {
                eprintln!("warning: order {order}: {msg}");
            }
            writeln!(out, "wrote {}", cfg.output_dir.join("moments.csv").display())?;
            Ok(())
        }
        Verb::TauEps {
            config,
            epsilon,
            m1,
            m2,
            horizon,
            set,
        } => {
            let (params, cfg_horizon) = match config {
                Some(path) => {
                    let cfg = load_config(&path, &set)?;
                    (cfg.model, cfg.horizon)
                }
                None if set.is_empty() => (ModelParams::non_critical(), 1.0),
                None => return Err(CliError::Usage("--set needs a config file".into())),
            };
            let inputs = PositivityBoundInputs::new(params, m1, m2, epsilon, horizon.unwrap_or(cfg_horizon))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let tau = tau_for_confidence(&inputs).map_err(|e| CliError::Runtime(e.to_string()))?;
            writeln!(out, "{tau}")?;
            Ok(())
        }
    }
}

fn check_params<W: Write>(p: &ModelParams, out: &mut W) -> Result<(), CliError> {
    let (lo, hi) = p.negative_moment_range();
    writeln!(out, "regime: {:?}", p.regime())?;
    writeln!(out, "lambda: {:.4}", p.lambda())?;
    writeln!(out, "noise coefficient in Y: {}", p.noise_coeff())?;
    writeln!(out, "negative moments E|Y|^-q bounded for q in [{lo}, {hi}]")?;
    writeln!(out, "positive moments E|Y|^q bounded for q >= {}", p.positive_moment_threshold())?;
    Ok(())
}

fn prepare(args: &RunArgs) -> Result<(ExperimentConfig, Runner), CliError> {
    let mut cfg = load_config(&args.config, &args.set)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = args.paths {
        cfg.n_paths = n;
    }
    if let Some(dir) = &args.out {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    Ok((cfg, Runner::from_env().verbose(args.verbose)))
}

/// Reads a config file and applies `key=value` overrides. Dotted keys reach
/// into objects; values are parsed as JSON, falling back to a string.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(root: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{item}` is not KEY=VALUE")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = root;
    for part in key.split('.') {
        slot = slot
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{part}` is not inside an object")))?
            .entry(part)
            .or_insert(Value::Null);
    }
    *slot = parsed;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<io::BufWriter<fs::File>, CliError> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(io::BufWriter::new(file))
}

fn write_paths_csv<W: Write>(w: W, meta: &CsvMeta, paths: &[crate::harness::SamplePath]) -> Result<(), CliError> {
    let mut w = w;
    writeln!(
        w,
        "# config_hash={} seed={} T={} version={}",
        meta.config_hash, meta.seed, meta.horizon, meta.version
    )?;
    writeln!(w, "scheme,path,t,x")?;
    for sp in paths {
        for (n, x) in sp.x.iter().enumerate() {
            writeln!(w, "{},{},{},{}", sp.scheme, sp.path, n as f64 * sp.tau, x)?;
        }
    }
    w.flush()?;
    Ok(())
}

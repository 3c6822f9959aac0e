//! Monte-Carlo experiments: strong convergence against a fine reference,
//! efficiency, positivity censuses and moment tracking.
//!
//! Randomness depends only on `(master_seed, path_index)` and per-path
//! results are reduced in path order, so every aggregate is independent of
//! the number of workers.

mod config;
mod output;

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{fit_rate, RateFit};
use crate::model::ModelParams;
use crate::noise::{GridSpec, IncrementTable, NoiseError};
use crate::schemes::{simulate_path, simulate_path_with, SchemeError, SchemeId};

pub use config::{ExperimentConfig, ReferenceSpec, COMPARED_SCHEMES};
pub use output::{
    write_convergence_csv, write_moments_csv, write_positivity_csv, write_rates_csv, CsvMeta,
};

/// Fraction of failed paths tolerated per `(scheme, tau)` cell.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;
/// Environment variable capping the worker count.
pub const WORKERS_ENV: &str = "AITSDE_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("{scheme} at tau={tau}: {excluded} of {n_paths} paths failed, above the 1% limit")]
    TooManyExclusions {
        scheme: SchemeId,
        tau: f64,
        excluded: usize,
        n_paths: usize,
    },
    #[error("path {path} under {scheme}: {source}")]
    Path {
        scheme: SchemeId,
        path: u64,
        #[source]
        source: SchemeError,
    },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Strong error of one scheme at one step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub scheme: SchemeId,
    pub tau: f64,
    /// Paths that entered the average.
    pub n_paths: usize,
    pub rms_error_x: f64,
    pub rms_error_y: f64,
    /// Ensemble wall time; zero unless measured in single-worker mode.
    pub wall_time_s: f64,
    pub backstop_count: usize,
    pub negative_proposal_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ErrorRow>,
    /// Slopes of `log2 rms_error_x` against `log2 tau`, for every scheme
    /// with at least three positive errors.
    pub rates: Vec<(SchemeId, RateFit)>,
    /// Paths whose reference solution failed.
    pub reference_failures: usize,
}

impl ConvergenceReport {
    pub fn rate(&self, scheme: SchemeId) -> Option<RateFit> {
        self.rates.iter().find(|(s, _)| *s == scheme).map(|(_, r)| *r)
    }

    pub fn row(&self, scheme: SchemeId, tau: f64) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.tau == tau)
    }
}

/// Exact step counters of one `(scheme, tau)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusRow {
    pub scheme: SchemeId,
    pub tau: f64,
    pub n_paths: usize,
    pub total_steps: u64,
    pub negative_proposals: u64,
    pub backstop_invocations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub t: f64,
    pub order: f64,
    /// Sample mean of `|Y_n|^order`.
    pub mean_abs_y_pow: f64,
    /// Sample mean of `|Y_n|^-order`.
    pub mean_abs_y_negpow: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub scheme: SchemeId,
    pub tau: f64,
    pub n_paths: usize,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    /// Rows of one order, in time order.
    pub fn series(&self, order: f64) -> Vec<&MomentRow> {
        self.rows.iter().filter(|r| r.order == order).collect()
    }

    pub fn warnings(&self) -> Vec<(f64, String)> {
        let mut out: Vec<(f64, String)> = Vec::new();
        for row in &self.rows {
            if let Some(w) = &row.warning {
                if !out.iter().any(|(o, _)| *o == row.order) {
                    out.push((row.order, w.clone()));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellSample {
    err_x: f64,
    err_y: f64,
    backstops: usize,
    negatives: usize,
}

/// Per path: `None` if the reference failed, else one optional sample per cell.
type PathSamples = Option<Vec<Option<CellSample>>>;

/// Executes experiments on a fixed number of workers.
#[derive(Debug, Clone, Copy)]
pub struct Runner {
    workers: usize,
    verbose: bool,
}

impl Default for Runner {
    fn default() -> Self {
        Runner::from_env()
    }
}

impl Runner {
    pub fn new(workers: usize) -> Self {
        Runner {
            workers: workers.max(1),
            verbose: false,
        }
    }

    /// All available cores, capped by `AITSDE_WORKERS` when set.
    pub fn from_env() -> Self {
        let available = std::thread::available_parallelism().map_or(1, |n| n.get());
        let cap = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0);
        Runner::new(cap.map_or(available, |c| c.min(available)))
    }

    /// Print one stderr line per `(scheme, tau)` cell.
    pub fn verbose(mut self, verbose: bool) -> Self {
        self.verbose = verbose;
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    fn map_paths<T, F>(&self, n_paths: usize, f: F) -> Result<Vec<T>, HarnessError>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        if self.workers == 1 {
            return Ok((0..n_paths as u64).map(f).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?;
        Ok(pool.install(|| (0..n_paths as u64).into_par_iter().map(f).collect()))
    }

    /// Strong errors at `T` of every configured scheme against the reference.
    pub fn run_convergence(&self, cfg: &ExperimentConfig) -> Result<ConvergenceReport, HarnessError> {
        cfg.validate()?;
        let grid = cfg.reference_grid()?;
        let cells = cells(cfg);
        let per_path = self.map_paths(cfg.n_paths, |path| convergence_path(cfg, grid, &cells, path))?;
        let per_path = per_path.into_iter().collect::<Result<Vec<_>, _>>()?;
        let timings = vec![0.0; cells.len()];
        assemble_report(cfg, &cells, &per_path, &timings)
    }

    /// As [`run_convergence`](Self::run_convergence), with each cell's
    /// ensemble timed on the calling thread.
    ///
    /// Reference solutions and coarsened increments are prepared first
    /// (possibly in parallel); only the scheme loops are timed.
    pub fn run_efficiency(&self, cfg: &ExperimentConfig) -> Result<ConvergenceReport, HarnessError> {
        cfg.validate()?;
        let grid = cfg.reference_grid()?;
        let cells = cells(cfg);
        let prepared = self.map_paths(cfg.n_paths, |path| prepare_path(cfg, grid, path))?;
        let prepared = prepared.into_iter().collect::<Result<Vec<_>, _>>()?;

        let mut samples: Vec<Vec<Option<CellSample>>> = vec![Vec::with_capacity(cells.len()); cfg.n_paths];
        let mut timings = Vec::with_capacity(cells.len());
        for &(scheme, tau) in &cells {
            let tau_index = cfg.taus.iter().position(|&t| t == tau).expect("cell tau is configured");
            let start = Instant::now();
            for (slot, prep) in samples.iter_mut().zip(&prepared) {
                let sample = prep
                    .as_ref()
                    .and_then(|p| cell_sample(&cfg.model, scheme, cfg.x0, &p.increments[tau_index], tau, p.reference));
                slot.push(sample);
            }
            let elapsed = start.elapsed().as_secs_f64();
            if self.verbose {
                eprintln!("{scheme} tau={tau}: {elapsed:.3}s");
            }
            timings.push(elapsed);
        }
        let per_path: Vec<PathSamples> = prepared
            .iter()
            .zip(samples)
            .map(|(prep, s)| prep.as_ref().map(|_| s))
            .collect();
        assemble_report(cfg, &cells, &per_path, &timings)
    }

    /// Counts negative explicit proposals and backstop calls per cell.
    ///
    /// Noise is drawn on the grid of the smallest configured step; the
    /// reference solution is not needed.
    pub fn run_positivity_census(&self, cfg: &ExperimentConfig) -> Result<Vec<CensusRow>, HarnessError> {
        cfg.validate()?;
        let grid = cfg.finest_grid()?;
        let cells = cells(cfg);
        let per_path = self.map_paths(cfg.n_paths, |path| census_path(cfg, grid, &cells, path))?;
        let per_path = per_path.into_iter().collect::<Result<Vec<_>, _>>()?;

        let mut rows = Vec::with_capacity(cells.len());
        for (c, &(scheme, tau)) in cells.iter().enumerate() {
            let mut row = CensusRow {
                scheme,
                tau,
                n_paths: 0,
                total_steps: 0,
                negative_proposals: 0,
                backstop_invocations: 0,
            };
            for counts in per_path.iter().filter_map(|p| p[c]) {
                row.n_paths += 1;
                row.total_steps += counts.0;
                row.negative_proposals += counts.1;
                row.backstop_invocations += counts.2;
            }
            check_exclusions(scheme, tau, cfg.n_paths - row.n_paths, cfg.n_paths)?;
            if self.verbose {
                eprintln!("{scheme} tau={tau}: {} backstops", row.backstop_invocations);
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Sample moments of `Y` along the time grid for the first configured
    /// scheme at the first configured step.
    pub fn run_moment_tracking(&self, cfg: &ExperimentConfig, orders: &[f64]) -> Result<MomentReport, HarnessError> {
        cfg.validate()?;
        let scheme = cfg.schemes[0];
        let tau = cfg.taus[0];
        let grid = GridSpec::from_step(cfg.horizon, tau)?;
        let n_times = grid.n_fine() + 1;
        let width = 2 * orders.len();

        let per_path = self.map_paths(cfg.n_paths, |path| {
            let table = IncrementTable::generate(cfg.master_seed, path, grid);
            let p = &cfg.model;
            let mut acc = vec![0.0; n_times * width];
            let mut record = |n: usize, state: f64| {
                // states are positive by construction
                let y = scheme.to_y(p, state).unwrap_or(f64::NAN);
                for (k, &q) in orders.iter().enumerate() {
                    acc[n * width + 2 * k] = y.powf(q);
                    acc[n * width + 2 * k + 1] = y.powf(-q);
                }
            };
            let initial = scheme.from_x(p, cfg.x0).map_err(SchemeError::from)?;
            record(0, initial);
            simulate_path_with(scheme, p, initial, table.increments(), tau, &mut record)?;
            Ok::<_, SchemeError>(acc)
        })?;

        let mut sums = vec![0.0; n_times * width];
        let mut used = 0usize;
        for acc in per_path.iter().flatten() {
            used += 1;
            for (s, v) in sums.iter_mut().zip(acc) {
                *s += v;
            }
        }
        check_exclusions(scheme, tau, cfg.n_paths - used, cfg.n_paths)?;

        let warnings: Vec<Option<String>> = orders.iter().map(|&q| moment_warning(&cfg.model, q)).collect();
        let mut rows = Vec::with_capacity(n_times * orders.len());
        for n in 0..n_times {
            let t = n as f64 * tau;
            for (k, &order) in orders.iter().enumerate() {
                rows.push(MomentRow {
                    t,
                    order,
                    mean_abs_y_pow: sums[n * width + 2 * k] / used as f64,
                    mean_abs_y_negpow: sums[n * width + 2 * k + 1] / used as f64,
                    warning: warnings[k].clone(),
                });
            }
        }
        Ok(MomentReport {
            scheme,
            tau,
            n_paths: used,
            rows,
        })
    }

    /// Full trajectories in `X` of every configured scheme at the first
    /// configured step, for paths `0..n_paths`.
    pub fn run_sample_paths(&self, cfg: &ExperimentConfig) -> Result<Vec<SamplePath>, HarnessError> {
        cfg.validate()?;
        let tau = cfg.taus[0];
        let grid = GridSpec::from_step(cfg.horizon, tau)?;
        let per_path = self.map_paths(cfg.n_paths, |path| {
            let table = IncrementTable::generate(cfg.master_seed, path, grid);
            cfg.schemes
                .iter()
                .map(|&scheme| {
                    sample_path(&cfg.model, scheme, cfg.x0, table.increments(), tau).map_err(|source| {
                        HarnessError::Path { scheme, path, source }
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        let mut out = Vec::with_capacity(cfg.n_paths * cfg.schemes.len());
        for (path, xs) in per_path.into_iter().enumerate() {
            for (&scheme, x) in cfg.schemes.iter().zip(xs?) {
                out.push(SamplePath {
                    scheme,
                    path: path as u64,
                    tau,
                    x,
                });
            }
        }
        Ok(out)
    }
}

/// One simulated trajectory in `X` coordinates, `x[n]` at time `n * tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub scheme: SchemeId,
    pub path: u64,
    pub tau: f64,
    pub x: Vec<f64>,
}

fn sample_path(p: &ModelParams, scheme: SchemeId, x0: f64, increments: &[f64], tau: f64) -> Result<Vec<f64>, SchemeError> {
    let initial = scheme.from_x(p, x0)?;
    let mut xs = vec![0.0; increments.len() + 1];
    xs[0] = x0;
    let mut bad = None;
    simulate_path_with(scheme, p, initial, increments, tau, |n, state| match scheme.to_x(p, state) {
        Ok(x) => xs[n] = x,
        Err(e) => {
            bad.get_or_insert(e);
        }
    })?;
    match bad {
        Some(e) => Err(e.into()),
        None => Ok(xs),
    }
}

/// Convenience wrappers using [`Runner::from_env`].
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport, HarnessError> {
    Runner::from_env().run_convergence(cfg)
}

pub fn run_efficiency(cfg: &ExperimentConfig) -> Result<ConvergenceReport, HarnessError> {
    Runner::from_env().run_efficiency(cfg)
}

pub fn run_positivity_census(cfg: &ExperimentConfig) -> Result<Vec<CensusRow>, HarnessError> {
    Runner::from_env().run_positivity_census(cfg)
}

pub fn run_moment_tracking(cfg: &ExperimentConfig, orders: &[f64]) -> Result<MomentReport, HarnessError> {
    Runner::from_env().run_moment_tracking(cfg, orders)
}

pub fn run_sample_paths(cfg: &ExperimentConfig) -> Result<Vec<SamplePath>, HarnessError> {
    Runner::from_env().run_sample_paths(cfg)
}

fn moment_warning(p: &ModelParams, order: f64) -> Option<String> {
    if order <= 0.0 {
        return None;
    }
    let mut notes = Vec::new();
    if !p.positive_moment_admissible(order) {
        notes.push(format!(
            "E|Y|^{order} not covered: positive moments need order >= {}",
            p.positive_moment_threshold()
        ));
    }
    if !p.negative_moment_admissible(order) {
        let (lo, hi) = p.negative_moment_range();
        notes.push(format!("E|Y|^-{order} not covered: negative moments need order in [{lo}, {hi}]"));
    }
    (!notes.is_empty()).then(|| notes.join("; "))
}

fn cells(cfg: &ExperimentConfig) -> Vec<(SchemeId, f64)> {
    cfg.schemes
        .iter()
        .flat_map(|&s| cfg.taus.iter().map(move |&t| (s, t)))
        .collect()
}

fn check_exclusions(scheme: SchemeId, tau: f64, excluded: usize, n_paths: usize) -> Result<(), HarnessError> {
    if excluded as f64 > MAX_EXCLUDED_FRACTION * n_paths as f64 {
        Err(HarnessError::TooManyExclusions {
            scheme,
            tau,
            excluded,
            n_paths,
        })
    } else {
        Ok(())
    }
}

/// Terminal `(X, Y)` of the reference for one path, `None` on solver failure.
fn reference_terminal(cfg: &ExperimentConfig, table: &IncrementTable) -> Result<Option<(f64, f64)>, HarnessError> {
    let increments = table.at_step(cfg.reference.tau)?;
    Ok(terminal_xy(&cfg.model, cfg.reference.scheme, cfg.x0, &increments, cfg.reference.tau).map(|(x, y, _)| (x, y)))
}

fn terminal_xy(
    p: &ModelParams,
    scheme: SchemeId,
    x0: f64,
    increments: &[f64],
    tau: f64,
) -> Option<(f64, f64, crate::schemes::PathDiagnostics)> {
    let initial = scheme.from_x(p, x0).ok()?;
    let res = simulate_path(scheme, p, initial, increments, tau).ok()?;
    let x = scheme.to_x(p, res.terminal).ok()?;
    let y = scheme.to_y(p, res.terminal).ok()?;
    Some((x, y, res.diagnostics))
}

fn cell_sample(
    p: &ModelParams,
    scheme: SchemeId,
    x0: f64,
    increments: &[f64],
    tau: f64,
    reference: (f64, f64),
) -> Option<CellSample> {
    let (x, y, diag) = terminal_xy(p, scheme, x0, increments, tau)?;
    Some(CellSample {
        err_x: (x - reference.0).abs(),
        err_y: (y - reference.1).abs(),
        backstops: diag.backstop_count,
        negatives: diag.negative_proposal_count,
    })
}

fn convergence_path(
    cfg: &ExperimentConfig,
    grid: GridSpec,
    cells: &[(SchemeId, f64)],
    path: u64,
) -> Result<PathSamples, HarnessError> {
    let table = IncrementTable::generate(cfg.master_seed, path, grid);
    let Some(reference) = reference_terminal(cfg, &table)? else {
        return Ok(None);
    };
    let mut coarse: Vec<(f64, Vec<f64>)> = Vec::with_capacity(cfg.taus.len());
    for &tau in &cfg.taus {
        coarse.push((tau, table.at_step(tau)?));
    }
    let samples = cells
        .iter()
        .map(|&(scheme, tau)| {
            let inc = &coarse.iter().find(|(t, _)| *t == tau).expect("configured tau").1;
            cell_sample(&cfg.model, scheme, cfg.x0, inc, tau, reference)
        })
        .collect();
    Ok(Some(samples))
}

struct PreparedPath {
    reference: (f64, f64),
    /// Coarsened increments, one vector per configured tau.
    increments: Vec<Vec<f64>>,
}

fn prepare_path(cfg: &ExperimentConfig, grid: GridSpec, path: u64) -> Result<Option<PreparedPath>, HarnessError> {
    let table = IncrementTable::generate(cfg.master_seed, path, grid);
    let Some(reference) = reference_terminal(cfg, &table)? else {
        return Ok(None);
    };
    let increments = cfg
        .taus
        .iter()
        .map(|&tau| table.at_step(tau))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(PreparedPath { reference, increments }))
}

type CensusCounts = (u64, u64, u64);

fn census_path(
    cfg: &ExperimentConfig,
    grid: GridSpec,
    cells: &[(SchemeId, f64)],
    path: u64,
) -> Result<Vec<Option<CensusCounts>>, HarnessError> {
    let table = IncrementTable::generate(cfg.master_seed, path, grid);
    let mut out = Vec::with_capacity(cells.len());
    for &(scheme, tau) in cells {
        let inc = table.at_step(tau)?;
        let counts = terminal_xy(&cfg.model, scheme, cfg.x0, &inc, tau).map(|(_, _, d)| {
            (
                d.steps as u64,
                d.negative_proposal_count as u64,
                d.backstop_count as u64,
            )
        });
        out.push(counts);
    }
    Ok(out)
}

fn assemble_report(
    cfg: &ExperimentConfig,
    cells: &[(SchemeId, f64)],
    per_path: &[PathSamples],
    timings: &[f64],
) -> Result<ConvergenceReport, HarnessError> {
    let reference_failures = per_path.iter().filter(|p| p.is_none()).count();
    let mut rows = Vec::with_capacity(cells.len());
    for (c, &(scheme, tau)) in cells.iter().enumerate() {
        let (mut sx, mut sy, mut used, mut backstops, mut negatives) = (0.0, 0.0, 0usize, 0usize, 0usize);
        for sample in per_path.iter().filter_map(|p| p.as_ref().and_then(|s| s[c])) {
            sx += sample.err_x * sample.err_x;
            sy += sample.err_y * sample.err_y;
            used += 1;
            backstops += sample.backstops;
            negatives += sample.negatives;
        }
        check_exclusions(scheme, tau, cfg.n_paths - used, cfg.n_paths)?;
        let denom = used.max(1) as f64;
        rows.push(ErrorRow {
            scheme,
            tau,
            n_paths: used,
            rms_error_x: (sx / denom).sqrt(),
            rms_error_y: (sy / denom).sqrt(),
            wall_time_s: timings[c],
            backstop_count: backstops,
            negative_proposal_count: negatives,
        });
    }
    let rates = cfg
        .schemes
        .iter()
        .filter_map(|&scheme| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.scheme == scheme)
                .map(|r| (r.tau, r.rms_error_x))
                .collect();
            fit_rate(&pts).ok().map(|fit| (scheme, fit))
        })
        .collect();
    Ok(ConvergenceReport {
        rows,
        rates,
        reference_failures,
    })
}

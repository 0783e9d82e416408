//! Seeded Monte Carlo sweeps over the exit cost.
//!
//! A sweep is a grid of independent cells, one per `(tau, run)` pair. Each
//! cell owns a ChaCha stream derived from the master seed and its grid
//! position, so results do not depend on how cells are scheduled.

mod config;
mod output;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use config::{ConfigError, Density, DensityKind, ExperimentConfig};
pub use output::{
    export_snapshot, replay, write_atomic, write_sweep_outputs, write_trace, SnapshotFormat,
    OUTPUT_FILES, SUMMARY_HEADER,
};

use crate::dynamics::{DynamicsError, ExitRule, Simulation};
use crate::graph::{DirectedNetwork, GraphError};
use crate::metrics::{
    ensemble_average, EnsembleSummary, MeanWithError, MetricsError, RobustnessSummary,
    RobustnessTracker, StepRecord,
};
use crate::reputation::{ReputationError, SolverConfig};

/// Environment variable consulted for the worker count when a config leaves it unset.
pub const WORKERS_ENV: &str = "REPNET_WORKERS";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Reputation(#[from] ReputationError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace truncated: line {line} has no terminating newline")]
    Truncated { line: u64 },
    #[error("unknown snapshot format `{0}` (expected `dot` or `json`)")]
    UnknownFormat(String),
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
    #[error("serialization failed: {0}")]
    Serialize(String),
}

/// The RNG for cell `(tau_idx, run)` of a sweep seeded with `master`.
pub fn cell_rng(master: u64, tau_idx: usize, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((tau_idx as u64) << 32) | run as u64);
    rng
}

/// How sweep cells are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool with this many threads. Runs sequentially when the crate is
    /// built without the `parallel` feature.
    Parallel {
        workers: usize,
    },
}

impl Execution {
    /// Parallel when the feature is enabled, with workers taken from the config,
    /// then [`WORKERS_ENV`], then the number of available cores.
    pub fn for_config(cfg: &ExperimentConfig) -> Result<Self, ConfigError> {
        if !cfg!(feature = "parallel") {
            return Ok(Self::Sequential);
        }
        let workers = match cfg.workers {
            Some(w) => w,
            None => match std::env::var(WORKERS_ENV) {
                Ok(text) => match text.trim().parse::<usize>() {
                    Ok(w) if w >= 1 => w,
                    _ => {
                        return Err(ConfigError {
                            problems: vec![format!(
                                "{WORKERS_ENV}={text:?} is not a positive integer"
                            )],
                        })
                    }
                },
                Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
            },
        };
        Ok(Self::Parallel { workers })
    }
}

/// One independent run of the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub tau_idx: usize,
    pub run: usize,
    /// Records at every `sample_every`-th step plus the final step.
    pub samples: Vec<StepRecord>,
    /// Largest out-degree of the network at each sampled step.
    pub sample_max_out_degree: Vec<usize>,
    pub robustness: RobustnessSummary,
    /// Population-average reputation averaged over the post burn-in steps.
    pub time_avg_b: f64,
    pub final_b: f64,
    pub unconverged_steps: u64,
}

/// Aggregates for one exit cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSummary {
    pub tau: f64,
    pub p: f64,
    pub links_per_user: f64,
    pub runs: usize,
    pub benefit_time: MeanWithError,
    pub benefit_final: MeanWithError,
    /// `None` when no sampled snapshot passed the whole-network filter.
    pub ensemble: Option<EnsembleSummary>,
    pub robustness: RobustnessSummary,
    pub mean_max_out_degree: Option<f64>,
    pub unconverged_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub taus: Vec<TauSummary>,
    /// Ordered by `(tau_idx, run)` regardless of scheduling.
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn cells_for(&self, tau_idx: usize) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(move |c| c.tau_idx == tau_idx)
    }
}

/// Runs one cell of the grid.
pub fn run_cell(
    cfg: &ExperimentConfig,
    tau_idx: usize,
    run: usize,
) -> Result<CellResult, ExperimentError> {
    let rule = ExitRule::new(cfg.tau_values[tau_idx])?;
    let mut sim = Simulation::new(
        cfg.n,
        rule,
        cfg.model(),
        cfg.solver,
        cell_rng(cfg.seed, tau_idx, run),
    );
    let burn_in = cfg.burn_in_steps();
    let mut tracker = RobustnessTracker::default();
    let mut samples = Vec::with_capacity((cfg.t_max / cfg.sample_every + 1) as usize);
    let mut sample_max_out_degree = Vec::with_capacity(samples.capacity());
    let (mut b_sum, mut b_count) = (0.0, 0u64);
    for t in 0..cfg.t_max {
        let report = sim.advance()?;
        let rec = report.record;
        tracker.push(rec.core_alive, rec.rewired_fraction());
        if t >= burn_in {
            b_sum += rec.b_mean;
            b_count += 1;
        }
        if t % cfg.sample_every == 0 || t + 1 == cfg.t_max {
            sample_max_out_degree.push(report.max_out_degree);
            samples.push(rec);
        }
    }
    let final_b = samples.last().map_or(f64::NAN, |r| r.b_mean);
    Ok(CellResult {
        tau_idx,
        run,
        samples,
        sample_max_out_degree,
        robustness: tracker.finish(),
        time_avg_b: b_sum / b_count as f64,
        final_b,
        unconverged_steps: sim.unconverged_steps(),
    })
}

/// Runs the sweep with the scheduling chosen by [`Execution::for_config`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    let exec = Execution::for_config(cfg)?;
    run_experiment_with(cfg, exec)
}

pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    let grid: Vec<(usize, usize)> = (0..cfg.tau_values.len())
        .flat_map(|ti| (0..cfg.runs).map(move |r| (ti, r)))
        .collect();
    let cells = execute(cfg, &grid, exec)?;
    let taus = (0..cfg.tau_values.len())
        .map(|ti| summarize_tau(cfg, ti, cells.iter().filter(|c| c.tau_idx == ti)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        config: cfg.clone(),
        taus,
        cells,
    })
}

fn execute(
    cfg: &ExperimentConfig,
    grid: &[(usize, usize)],
    exec: Execution,
) -> Result<Vec<CellResult>, ExperimentError> {
    match exec {
        Execution::Sequential => grid.iter().map(|&(ti, r)| run_cell(cfg, ti, r)).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers } => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
            pool.install(|| {
                grid.par_iter()
                    .map(|&(ti, r)| run_cell(cfg, ti, r))
                    .collect()
            })
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => execute(cfg, grid, Execution::Sequential),
    }
}

fn summarize_tau<'a>(
    cfg: &ExperimentConfig,
    tau_idx: usize,
    cells: impl Iterator<Item = &'a CellResult>,
) -> Result<TauSummary, ExperimentError> {
    let cells: Vec<&CellResult> = cells.collect();
    let time: Vec<f64> = cells.iter().map(|c| c.time_avg_b).collect();
    let fin: Vec<f64> = cells.iter().map(|c| c.final_b).collect();
    let tagged: Vec<(usize, StepRecord)> = cells
        .iter()
        .flat_map(|c| c.samples.iter().map(move |r| (c.run, r.clone())))
        .collect();
    let ensemble = match ensemble_average(&tagged, cfg.filter_whole) {
        Ok(e) => Some(e),
        Err(MetricsError::EmptyEnsemble) => None,
        Err(e) => return Err(e.into()),
    };
    let degrees: Vec<f64> = cells
        .iter()
        .flat_map(|c| c.samples.iter().zip(&c.sample_max_out_degree))
        .filter(|(r, _)| !cfg.filter_whole || r.whole_network)
        .map(|(_, &d)| d as f64)
        .collect();
    let model = cfg.model();
    Ok(TauSummary {
        tau: cfg.tau_values[tau_idx],
        p: model.p(),
        links_per_user: model.links_per_user(cfg.n),
        runs: cells.len(),
        benefit_time: MeanWithError::from_samples(&time).expect("runs >= 1"),
        benefit_final: MeanWithError::from_samples(&fin).expect("runs >= 1"),
        ensemble,
        robustness: RobustnessSummary::pooled(cells.iter().map(|c| &c.robustness)),
        mean_max_out_degree: (!degrees.is_empty())
            .then(|| degrees.iter().sum::<f64>() / degrees.len() as f64),
        unconverged_steps: cells.iter().map(|c| c.unconverged_steps).sum(),
    })
}

/// Every step of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub records: Vec<StepRecord>,
}

/// A single run with every step recorded. Uses the same stream as sweep cell
/// `(0, 0)`, so a one-tau sweep and this function agree on the first run.
pub fn simulate(
    n: usize,
    density: Density,
    tau: f64,
    t_max: u64,
    seed: u64,
    solver: SolverConfig,
) -> Result<(SimulationTrace, DirectedNetwork), ExperimentError> {
    let mut cfg = ExperimentConfig::new(density, vec![tau]);
    cfg.n = n;
    cfg.t_max = t_max;
    cfg.runs = 1;
    cfg.seed = seed;
    cfg.solver = solver;
    cfg.validate()?;
    let rule = ExitRule::new(tau)?;
    let mut sim = Simulation::new(
        n,
        rule,
        cfg.model(),
        cfg.solver,
        cell_rng(seed, 0, 0),
    );
    let mut records = Vec::with_capacity(t_max as usize);
    for _ in 0..t_max {
        records.push(sim.advance()?.record);
    }
    Ok((SimulationTrace { records }, sim.network().clone()))
}

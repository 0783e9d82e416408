//! `repnet`: simulate, sweep, and inspect reputation networks.
//!
//! Exit status is 0 on success, 1 when arguments or inputs fail validation
//! (nothing is written in that case), and 2 when a run or a write fails.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use repnet::experiments::{
    export_snapshot, simulate, write_sweep_outputs, write_trace, Density, ExperimentConfig,
    ExperimentError, SnapshotFormat, SweepResult,
};
use repnet::graph::io::NetworkSnapshot;
use repnet::graph::{
    enumerate_cycles, CoreAnalysis, DirectedNetwork, DEFAULT_CYCLE_BUDGET, DEFAULT_MAX_NODES,
};
use repnet::metrics::robustness_from_trace;
use repnet::reputation::{chain_length_bound, equilibrium, SolverConfig};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "repnet",
    version,
    about = "Reputation dynamics on directed follower networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one seeded simulation and write its per-step trace as CSV.
    Simulate(SimulateArgs),
    /// Run a seeded sweep over exit costs and write summary and histogram CSVs.
    Sweep(SweepArgs),
    /// Read a 0/1 adjacency matrix and report its equilibrium, components and cycles.
    Analyze(AnalyzeArgs),
    /// Longest follower chain that survives an exit cost below an anchor user.
    ChainBound(ChainBoundArgs),
    /// Convert a matrix or JSON snapshot into a DOT or JSON snapshot.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Experiment config (TOML). Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of users.
    #[arg(long)]
    n: Option<usize>,
    /// Link probability for each ordered pair of users.
    #[arg(long, conflicts_with = "m")]
    p: Option<f64>,
    /// Average links per user, `p (N - 1)`.
    #[arg(long)]
    m: Option<f64>,
    /// Number of time steps.
    #[arg(long)]
    t_max: Option<u64>,
    /// Master seed; all randomness derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Emit a machine-readable JSON report on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Exit cost.
    #[arg(long)]
    tau: Option<f64>,
    /// Trace CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Exit costs, comma separated.
    #[arg(long, value_delimiter = ',')]
    tau: Option<Vec<f64>>,
    /// Independent runs per exit cost.
    #[arg(long)]
    runs: Option<usize>,
    /// Sampling period for histogram snapshots.
    #[arg(long)]
    sample_every: Option<u64>,
    /// Worker threads (overrides the config and REPNET_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Matrix file: row i holds a_ij, 1 when user j follows user i.
    matrix: PathBuf,
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ChainBoundArgs {
    /// Relative reputation of the anchor user.
    #[arg(long = "b")]
    b_anchor: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    lambda1: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Matrix text file, or a `.json` snapshot.
    #[arg(long)]
    input: PathBuf,
    /// `dot` or `json`.
    #[arg(long)]
    format: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_)
            | ExperimentError::UnknownFormat(_)
            | ExperimentError::Graph(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn runtime(msg: impl ToString) -> Failure {
    Failure::Runtime(msg.to_string())
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    println!("{text}");
    Ok(())
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Outcome {
    match path {
        Some(p) => repnet::experiments::write_atomic(p, bytes).map_err(runtime),
        None => std::io::stdout().write_all(bytes).map_err(runtime),
    }
}

/// Loads the config named by `--config`, or starts from defaults when the
/// density is given on the command line, then applies flag overrides.
fn base_config(model: &ModelArgs, taus: Option<Vec<f64>>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &model.config {
        Some(path) => ExperimentConfig::from_path(path).map_err(|e| invalid(e.to_string()))?,
        None => {
            let density = match (model.p, model.m) {
                (Some(p), _) => Density::probability(p),
                (_, Some(m)) => Density::links_per_user(m),
                _ => return Err(invalid("either --config or one of --p / --m is required")),
            };
            let taus = taus
                .clone()
                .ok_or_else(|| invalid("--tau is required without --config"))?;
            ExperimentConfig::new(density, taus)
        }
    };
    if let Some(p) = model.p {
        cfg.density = Density::probability(p);
    }
    if let Some(m) = model.m {
        cfg.density = Density::links_per_user(m);
    }
    if let Some(t) = taus {
        cfg.tau_values = t;
    }
    if let Some(n) = model.n {
        cfg.n = n;
    }
    if let Some(t) = model.t_max {
        cfg.t_max = t;
    }
    if let Some(s) = model.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct SimulateReport {
    n: usize,
    p: f64,
    tau: f64,
    t_max: u64,
    seed: u64,
    mean_b: f64,
    final_b_mean: f64,
    mean_lifetime: Option<f64>,
    mean_recovery: Option<f64>,
    mean_rewired_fraction: f64,
    lifetimes: Vec<u64>,
    recoveries: Vec<u64>,
    out: Option<PathBuf>,
}

fn run_simulate(args: SimulateArgs) -> Outcome {
    let cfg = base_config(&args.model, args.tau.map(|t| vec![t]))?;
    let tau = match cfg.tau_values.as_slice() {
        [t] => *t,
        _ => return Err(invalid("simulate needs exactly one exit cost; pass --tau")),
    };
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    let (trace, _) = simulate(
        cfg.n,
        cfg.density,
        tau,
        cfg.t_max,
        cfg.seed,
        cfg.solver,
    )?;
    let summary = robustness_from_trace(&trace.records).map_err(runtime)?;
    match &args.out {
        Some(path) => write_trace(&trace, path)?,
        None if !args.model.json => write_output(None, &trace.to_csv()?)?,
        None => {}
    }
    if args.model.json {
        let mean_b =
            trace.records.iter().map(|r| r.b_mean).sum::<f64>() / trace.records.len() as f64;
        print_json(&SimulateReport {
            n: cfg.n,
            p: cfg.model().p(),
            tau,
            t_max: cfg.t_max,
            seed: cfg.seed,
            mean_b,
            final_b_mean: trace.records.last().map_or(f64::NAN, |r| r.b_mean),
            mean_lifetime: summary.mean_lifetime,
            mean_recovery: summary.mean_recovery,
            mean_rewired_fraction: summary.mean_rewired_fraction,
            lifetimes: summary.lifetimes,
            recoveries: summary.recoveries,
            out: args.out,
        })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    tau: f64,
    p: f64,
    runs: usize,
    mean_b: f64,
    std_error_b: f64,
    mean_b_final: f64,
    mean_lifetime: Option<f64>,
    mean_recovery: Option<f64>,
    mean_rewired_fraction: f64,
}

#[derive(Serialize)]
struct SweepReport {
    out: PathBuf,
    files: Vec<PathBuf>,
    taus: Vec<SweepRow>,
}

fn sweep_rows(result: &SweepResult) -> Vec<SweepRow> {
    result
        .taus
        .iter()
        .map(|s| SweepRow {
            tau: s.tau,
            p: s.p,
            runs: s.runs,
            mean_b: s.benefit_time.mean,
            std_error_b: s.benefit_time.std_error,
            mean_b_final: s.benefit_final.mean,
            mean_lifetime: s.robustness.mean_lifetime,
            mean_recovery: s.robustness.mean_recovery,
            mean_rewired_fraction: s.robustness.mean_rewired_fraction,
        })
        .collect()
}

fn run_sweep(args: SweepArgs) -> Outcome {
    let mut cfg = base_config(&args.model, args.tau)?;
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(s) = args.sample_every {
        cfg.sample_every = s;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    let result = repnet::experiments::run_experiment(&cfg)?;
    let files = write_sweep_outputs(&result, &args.out)?;
    let rows = sweep_rows(&result);
    if args.model.json {
        return print_json(&SweepReport {
            out: args.out,
            files,
            taus: rows,
        });
    }
    println!(
        "{:>6} {:>10} {:>10} {:>12} {:>12} {:>10}",
        "tau", "mean_b", "se", "lifetime", "recovery", "rewired"
    );
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.1}"));
    for r in rows {
        println!(
            "{:>6.3} {:>10.4} {:>10.4} {:>12} {:>12} {:>10.4}",
            r.tau,
            r.mean_b,
            r.std_error_b,
            fmt(r.mean_lifetime),
            fmt(r.mean_recovery),
            r.mean_rewired_fraction
        );
    }
    println!("wrote {} files to {}", files.len(), args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct CycleSection {
    total: usize,
    truncated: bool,
    count_by_length: BTreeMap<usize, usize>,
    cycles: Vec<Vec<usize>>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    n: usize,
    edges: usize,
    lambda1: f64,
    converged: bool,
    iterations: usize,
    acyclic: bool,
    b: Vec<f64>,
    x: Vec<f64>,
    sccs: Vec<Vec<usize>>,
    core: Vec<usize>,
    core_size: usize,
    whole_network: bool,
    /// Absent when the network is too large for exact enumeration.
    cycles: Option<CycleSection>,
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> Result<DirectedNetwork, Failure> {
    let text = read_input(path)?;
    DirectedNetwork::from_adjacency_text(&text)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn joined(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn sets(v: &[Vec<usize>]) -> String {
    v.iter()
        .map(|c| {
            format!(
                "{{{}}}",
                c.iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn run_analyze(args: AnalyzeArgs) -> Outcome {
    let solver = SolverConfig::default().with_tolerance(args.tolerance);
    solver.validate().map_err(|e| invalid(e.to_string()))?;
    let net = load_matrix(&args.matrix)?;
    let eq = equilibrium(&net, &solver).map_err(|e| invalid(e.to_string()))?;
    let analysis = CoreAnalysis::compute(&net);
    let cycles = enumerate_cycles(&net, DEFAULT_MAX_NODES, DEFAULT_CYCLE_BUDGET)
        .ok()
        .map(|c| CycleSection {
            total: c.len(),
            truncated: c.truncated,
            count_by_length: c.count_by_length,
            cycles: c.cycles,
        });
    let report = AnalyzeReport {
        n: net.n(),
        edges: net.edge_count(),
        lambda1: eq.lambda1,
        converged: eq.converged,
        iterations: eq.iterations,
        acyclic: eq.acyclic,
        b: eq.b,
        x: eq.x,
        sccs: analysis.sccs,
        core: analysis.core,
        core_size: analysis.core_size,
        whole_network: analysis.whole_network_component,
        cycles,
    };
    if args.json {
        return print_json(&report);
    }
    println!("users    {}  links {}", report.n, report.edges);
    println!(
        "lambda1  {:.6}{}",
        report.lambda1,
        if report.converged {
            ""
        } else {
            "  (not converged)"
        }
    );
    println!("b        {}", joined(&report.b));
    println!("x        {}", joined(&report.x));
    println!("sccs     {}", sets(&report.sccs));
    println!(
        "core     {} (size {})",
        sets(std::slice::from_ref(&report.core)),
        report.core_size
    );
    match &report.cycles {
        Some(c) => {
            let by_len: Vec<String> = c
                .count_by_length
                .iter()
                .map(|(l, k)| format!("{k}x{l}"))
                .collect();
            let more = if c.truncated { " (truncated)" } else { "" };
            println!("cycles   {} [{}]{more}", c.total, by_len.join(" "));
        }
        None => println!("cycles   skipped (more than {DEFAULT_MAX_NODES} users)"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ChainBoundReport {
    b_anchor: f64,
    tau: f64,
    lambda1: f64,
    n: usize,
}

fn run_chain_bound(args: ChainBoundArgs) -> Outcome {
    let n = chain_length_bound(args.b_anchor, args.tau, args.lambda1)
        .map_err(|e| invalid(e.to_string()))?;
    if args.json {
        return print_json(&ChainBoundReport {
            b_anchor: args.b_anchor,
            tau: args.tau,
            lambda1: args.lambda1,
            n,
        });
    }
    println!("{n}");
    Ok(())
}

fn run_export(args: ExportArgs) -> Outcome {
    let format: SnapshotFormat = args.format.parse()?;
    let is_json = args
        .input
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let net = if is_json {
        let text = read_input(&args.input)?;
        let snap: NetworkSnapshot = serde_json::from_str(&text)
            .map_err(|e| invalid(format!("{}: {e}", args.input.display())))?;
        snap.to_network().map_err(|e| invalid(e.to_string()))?
    } else {
        load_matrix(&args.input)?
    };
    let analysis = CoreAnalysis::compute(&net);
    let eq = if net.n() > 0 {
        Some(equilibrium(&net, &SolverConfig::default()).map_err(runtime)?)
    } else {
        None
    };
    let bytes = export_snapshot(&net, &analysis, eq.as_ref(), format)?;
    write_output(args.out.as_deref(), &bytes)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Analyze(a) => run_analyze(a),
        Command::ChainBound(a) => run_chain_bound(a),
        Command::Export(a) => run_export(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{ExperimentError, SimulationTrace, SweepResult};
use crate::graph::io::{to_dot, NetworkSnapshot};
use crate::graph::{CoreAnalysis, DirectedNetwork};
use crate::metrics::StepRecord;
use crate::reputation::EquilibriumResult;

pub const SUMMARY_HEADER: &str =
    "tau,p,runs,mean_b,mean_lifetime,mean_recovery,mean_rewired_fraction";
const BENEFIT_HEADER: &str = "tau,p,runs,mean_b_time,se_b_time,mean_b_final,se_b_final";
const CORE_HIST_HEADER: &str = "tau,core_size,probability";
const LAMBDA_HIST_HEADER: &str = "tau,bin_start,bin_end,probability";
const STRUCTURE_HEADER: &str =
    "tau,samples,mean_core_size,mean_lambda1,mean_max_out_degree,unconverged_steps";
const LIFETIMES_HEADER: &str = "tau,kind,length";

/// Files written by [`write_sweep_outputs`], in order.
pub const OUTPUT_FILES: [&str; 6] = [
    "summary.csv",
    "benefit.csv",
    "hist_core_size.csv",
    "hist_lambda1.csv",
    "structure.csv",
    "lifetimes.csv",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), num)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| ExperimentError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn render_sweep(result: &SweepResult) -> [String; 6] {
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut benefit = format!("{BENEFIT_HEADER}\n");
    let mut core_hist = format!("{CORE_HIST_HEADER}\n");
    let mut lambda_hist = format!("{LAMBDA_HIST_HEADER}\n");
    let mut structure = format!("{STRUCTURE_HEADER}\n");
    let mut lifetimes = format!("{LIFETIMES_HEADER}\n");
    for s in &result.taus {
        let tau = num(s.tau);
        let r = &s.robustness;
        let _ = writeln!(
            summary,
            "{tau},{},{},{},{},{},{}",
            num(s.p),
            s.runs,
            num(s.benefit_time.mean),
            opt(r.mean_lifetime),
            opt(r.mean_recovery),
            num(r.mean_rewired_fraction)
        );
        let _ = writeln!(
            benefit,
            "{tau},{},{},{},{},{},{}",
            num(s.p),
            s.runs,
            num(s.benefit_time.mean),
            num(s.benefit_time.std_error),
            num(s.benefit_final.mean),
            num(s.benefit_final.std_error)
        );
        match &s.ensemble {
            Some(e) => {
                for (q, p) in &e.histogram_core_size {
                    let _ = writeln!(core_hist, "{tau},{q},{}", num(*p));
                }
                let w = e.histogram_lambda1.bin_width;
                for (k, p) in e.histogram_lambda1.probabilities.iter().enumerate() {
                    if *p > 0.0 {
                        let _ = writeln!(
                            lambda_hist,
                            "{tau},{},{},{}",
                            num(k as f64 * w),
                            num((k + 1) as f64 * w),
                            num(*p)
                        );
                    }
                }
                let _ = writeln!(
                    structure,
                    "{tau},{},{},{},{},{}",
                    e.included,
                    num(e.mean_core_size),
                    num(e.mean_lambda1),
                    opt(s.mean_max_out_degree),
                    s.unconverged_steps
                );
            }
            None => {
                let _ = writeln!(structure, "{tau},0,NaN,NaN,NaN,{}", s.unconverged_steps);
            }
        }
        for l in &r.lifetimes {
            let _ = writeln!(lifetimes, "{tau},lifetime,{l}");
        }
        for l in &r.recoveries {
            let _ = writeln!(lifetimes, "{tau},recovery,{l}");
        }
    }
    [
        summary,
        benefit,
        core_hist,
        lambda_hist,
        structure,
        lifetimes,
    ]
}

/// Writes every file of [`OUTPUT_FILES`] into `dir`, creating it if needed.
pub fn write_sweep_outputs(
    result: &SweepResult,
    dir: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for (name, body) in OUTPUT_FILES.iter().zip(render_sweep(result)) {
        let path = dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

impl SimulationTrace {
    pub fn to_csv(&self) -> Result<Vec<u8>, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.records.is_empty() {
            w.write_record(StepRecord::CSV_HEADER.split(','))
                .map_err(|e| ExperimentError::Serialize(e.to_string()))?;
        }
        for r in &self.records {
            w.serialize(r)
                .map_err(|e| ExperimentError::Serialize(e.to_string()))?;
        }
        w.into_inner()
            .map_err(|e| ExperimentError::Serialize(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self, ExperimentError> {
        let line_count = text.lines().count() as u64;
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(ExperimentError::Truncated { line: line_count });
        }
        let header = text.lines().next().unwrap_or("");
        if header.trim_end_matches('\r') != StepRecord::CSV_HEADER {
            return Err(ExperimentError::Parse {
                line: 1,
                message: format!("expected header `{}`", StepRecord::CSV_HEADER),
            });
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut records: Vec<StepRecord> = Vec::new();
        for row in rdr.deserialize() {
            let rec: StepRecord = row.map_err(|e| ExperimentError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            if let Some(prev) = records.last() {
                if rec.t <= prev.t {
                    return Err(ExperimentError::Parse {
                        line: records.len() as u64 + 2,
                        message: format!("time {} does not follow {}", rec.t, prev.t),
                    });
                }
            }
            records.push(rec);
        }
        Ok(Self { records })
    }
}

pub fn write_trace(trace: &SimulationTrace, path: &Path) -> Result<(), ExperimentError> {
    write_atomic(path, &trace.to_csv()?)
}

/// Loads a trace written by [`write_trace`]. Any malformed or unterminated
/// line fails the whole load.
pub fn replay(path: &Path) -> Result<SimulationTrace, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    SimulationTrace::from_csv(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Dot,
    Json,
}

impl FromStr for SnapshotFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(Self::Dot),
            "json" => Ok(Self::Json),
            _ => Err(ExperimentError::UnknownFormat(s.to_string())),
        }
    }
}

pub fn export_snapshot(
    net: &DirectedNetwork,
    analysis: &CoreAnalysis,
    eq: Option<&EquilibriumResult>,
    format: SnapshotFormat,
) -> Result<Vec<u8>, ExperimentError> {
    match format {
        SnapshotFormat::Dot => {
            Ok(to_dot(net, &analysis.core, eq.map(|e| e.b.as_slice())).into_bytes())
        }
        SnapshotFormat::Json => {
            let mut snap = NetworkSnapshot::new(net, &analysis.core);
            if let Some(e) = eq {
                snap = snap.with_equilibrium(&e.b, e.lambda1);
            }
            let mut bytes = serde_json::to_vec_pretty(&snap)
                .map_err(|e| ExperimentError::Serialize(e.to_string()))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_experiment_with, Density, Execution, ExperimentConfig};
    use crate::graph::fixtures::figure_one;
    use crate::metrics::robustness_from_trace;
    use crate::reputation::{equilibrium, SolverConfig};

    fn rec(t: u64, alive: bool) -> StepRecord {
        StepRecord {
            t,
            b_mean: 0.5 + t as f64 / 3.0,
            lambda1: 1.0 / 3.0,
            core_size: if alive { 3 } else { 0 },
            core_alive: alive,
            departed: 1,
            y_remaining: 0.8,
            whole_network: true,
        }
    }

    fn trace() -> SimulationTrace {
        SimulationTrace {
            records: [true, true, false, true, true, false, false]
                .iter()
                .enumerate()
                .map(|(t, &a)| rec(t as u64, a))
                .collect(),
        }
    }

    #[test]
    fn trace_header_is_exact() {
        let bytes = trace().to_csv().unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().next(), Some(StepRecord::CSV_HEADER));
        let empty = SimulationTrace { records: vec![] }.to_csv().unwrap();
        assert_eq!(empty, format!("{}\n", StepRecord::CSV_HEADER).into_bytes());
    }

    #[test]
    fn replay_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let t = trace();
        write_trace(&t, &path).unwrap();
        let back = replay(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(
            robustness_from_trace(&back.records).unwrap(),
            robustness_from_trace(&t.records).unwrap()
        );
    }

    #[test]
    fn truncated_trace_is_rejected() {
        let text = String::from_utf8(trace().to_csv().unwrap()).unwrap();
        let cut = &text[..text.len() - 5];
        assert!(matches!(
            SimulationTrace::from_csv(cut),
            Err(ExperimentError::Truncated { line: 8 })
        ));
    }

    #[test]
    fn malformed_row_reports_its_line() {
        let text = String::from_utf8(trace().to_csv().unwrap()).unwrap();
        let bad = text.replacen("true", "maybe", 1);
        match SimulationTrace::from_csv(&bad) {
            Err(ExperimentError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let short = format!("{}\n0,0.5,1\n", StepRecord::CSV_HEADER);
        assert!(matches!(
            SimulationTrace::from_csv(&short),
            Err(ExperimentError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            SimulationTrace::from_csv("t,b\n"),
            Err(ExperimentError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn figure_one_dot_has_core_styling() {
        let net = figure_one();
        let analysis = CoreAnalysis::compute(&net);
        let eq = equilibrium(&net, &SolverConfig::default()).unwrap();
        let dot = String::from_utf8(
            export_snapshot(&net, &analysis, Some(&eq), SnapshotFormat::Dot).unwrap(),
        )
        .unwrap();
        assert_eq!(dot.matches("->").count(), 6);
        assert_eq!(dot.matches("core=true").count(), 3);
        assert!(dot.contains("1.00"));
        assert!(dot.contains("0.43"));
    }

    #[test]
    fn json_export_round_trips() {
        let net = figure_one();
        let analysis = CoreAnalysis::compute(&net);
        let eq = equilibrium(&net, &SolverConfig::default()).unwrap();
        let bytes = export_snapshot(&net, &analysis, Some(&eq), SnapshotFormat::Json).unwrap();
        let snap: NetworkSnapshot = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(snap.to_network().unwrap(), net);
        assert_eq!(snap.core, vec![0, 1, 2]);
        assert_eq!(snap.lambda1, Some(eq.lambda1));
    }

    #[test]
    fn empty_network_exports_valid_documents() {
        let net = DirectedNetwork::new(0);
        let analysis = CoreAnalysis::compute(&net);
        let dot = export_snapshot(&net, &analysis, None, SnapshotFormat::Dot).unwrap();
        assert_eq!(dot, b"digraph network {\n}\n");
        let json = export_snapshot(&net, &analysis, None, SnapshotFormat::Json).unwrap();
        let snap: NetworkSnapshot = serde_json::from_slice(&json).unwrap();
        assert_eq!(snap.n, 0);
    }

    #[test]
    fn unknown_format_is_an_error() {
        assert!(matches!(
            "graphml".parse::<SnapshotFormat>(),
            Err(ExperimentError::UnknownFormat(_))
        ));
        assert_eq!(
            "JSON".parse::<SnapshotFormat>().unwrap(),
            SnapshotFormat::Json
        );
    }

    fn sweep_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Density::links_per_user(1.0), vec![0.0, 0.1]);
        cfg.n = 10;
        cfg.t_max = 120;
        cfg.runs = 2;
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn sweep_outputs_are_byte_identical_across_reruns() {
        let cfg = sweep_cfg();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_sweep_outputs(
            &run_experiment_with(&cfg, Execution::Sequential).unwrap(),
            a.path(),
        )
        .unwrap();
        write_sweep_outputs(
            &run_experiment_with(&cfg, Execution::Parallel { workers: 2 }).unwrap(),
            b.path(),
        )
        .unwrap();
        for name in OUTPUT_FILES {
            let x = std::fs::read(a.path().join(name)).unwrap();
            let y = std::fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
        let summary = std::fs::read_to_string(a.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().next(), Some(SUMMARY_HEADER));
        assert_eq!(summary.lines().count(), 3);
        let leftovers = std::fs::read_dir(a.path()).unwrap().count();
        assert_eq!(leftovers, OUTPUT_FILES.len());
    }

    #[test]
    fn one_step_one_run_gives_one_record_per_tau() {
        let mut cfg = sweep_cfg();
        cfg.t_max = 1;
        cfg.runs = 1;
        let res = run_experiment_with(&cfg, Execution::Sequential).unwrap();
        assert_eq!(res.cells.len(), 2);
        assert!(res.cells.iter().all(|c| c.samples.len() == 1));
    }
}

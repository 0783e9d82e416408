use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn repnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repnet"))
        .args(args)
        .env_remove("REPNET_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", stderr(out));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn keys(v: &Value) -> Vec<&str> {
    let mut k: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    k.sort_unstable();
    k
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
    }
}

#[test]
fn chain_bound_prints_five() {
    let out = repnet(&[
        "chain-bound",
        "--b",
        "0.75",
        "--tau",
        "0.2",
        "--lambda1",
        "1.32",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "5\n");
    let v = json(&repnet(&[
        "chain-bound",
        "--b",
        "0.75",
        "--tau",
        "0.2",
        "--lambda1",
        "1.32",
        "--json",
    ]));
    assert_eq!(keys(&v), ["b_anchor", "lambda1", "n", "tau"]);
    assert_eq!(v["n"], 5);
}

#[test]
fn chain_bound_rejects_out_of_domain_input() {
    let out = repnet(&[
        "chain-bound",
        "--b",
        "0.75",
        "--tau",
        "0.2",
        "--lambda1",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).is_empty());
}

#[test]
fn analyze_two_cycle_example() {
    let v = json(&repnet(&[
        "analyze",
        fixture("cycles_3_4.txt").to_str().unwrap(),
        "--json",
    ]));
    assert_eq!(
        keys(&v),
        [
            "acyclic",
            "b",
            "converged",
            "core",
            "core_size",
            "cycles",
            "edges",
            "iterations",
            "lambda1",
            "n",
            "sccs",
            "whole_network",
            "x"
        ]
    );
    assert!((v["lambda1"].as_f64().unwrap() - 1.22).abs() <= 0.005);
    assert_close(&floats(&v["b"]), &[0.819, 0.671, 1.0, 0.55], 0.005);
    assert_eq!(
        keys(&v["cycles"]),
        ["count_by_length", "cycles", "total", "truncated"]
    );
    assert_eq!(v["cycles"]["count_by_length"]["3"], 1);
    assert_eq!(v["cycles"]["count_by_length"]["4"], 1);
    let x = floats(&v["x"]);
    assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn analyze_three_cycle_chain_example() {
    let v = json(&repnet(&[
        "analyze",
        fixture("cycles_3_4_3.txt").to_str().unwrap(),
        "--json",
    ]));
    assert!((v["lambda1"].as_f64().unwrap() - 1.325).abs() <= 0.005);
    assert_close(
        &floats(&v["b"]),
        &[0.755, 0.57, 1.0, 0.755, 0.57, 0.43],
        0.005,
    );
}

#[test]
fn analyze_zero_matrix() {
    let v = json(&repnet(&[
        "analyze",
        fixture("zero3.txt").to_str().unwrap(),
        "--json",
    ]));
    assert_eq!(v["lambda1"].as_f64(), Some(0.0));
    assert_eq!(v["sccs"], serde_json::json!([[0], [1], [2]]));
    assert_eq!(v["core_size"], 0);
}

#[test]
fn analyze_text_report_accepts_commas() {
    let out = repnet(&["analyze", fixture("core_with_chain.csv").to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("lambda1  1.32"), "{text}");
    assert!(text.contains("core     {0,1,2} (size 3)"), "{text}");
}

#[test]
fn analyze_names_the_offending_cell() {
    for (file, needle) in [
        ("ragged.txt", "row 1"),
        ("self_loop.txt", "row 0, column 0"),
        ("non_binary.txt", "row 0, column 1"),
    ] {
        let out = repnet(&["analyze", fixture(file).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{file}");
        assert!(stderr(&out).contains(needle), "{file}: {}", stderr(&out));
    }
}

#[test]
fn help_and_version_exit_zero() {
    let out = repnet(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    for cmd in ["simulate", "sweep", "analyze", "chain-bound", "export"] {
        assert!(stdout(&out).contains(cmd));
    }
    let sweep_help = stdout(&repnet(&["sweep", "--help"]));
    for flag in [
        "--config",
        "--out",
        "--seed",
        "--tau",
        "--p",
        "--m",
        "--n",
        "--t-max",
        "--runs",
        "--sample-every",
        "--json",
        "--workers",
    ] {
        assert!(sweep_help.contains(flag), "{flag}");
    }
    assert_eq!(repnet(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(repnet(&[]).status.code(), Some(1));
    assert_eq!(repnet(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = repnet(&[
        "sweep",
        "--p",
        "0.1",
        "--m",
        "1",
        "--tau",
        "0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
}

#[test]
fn missing_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = repnet(&[
        "sweep",
        "--config",
        "/definitely/missing.toml",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
}

#[test]
fn invalid_ranges_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = fixture("sweep.toml");
    let out = repnet(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--tau",
        "1.5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("tau 1.5"));
    assert!(!out_dir.exists());
    let trace = dir.path().join("t.csv");
    let out = repnet(&[
        "simulate",
        "--m",
        "1",
        "--tau",
        "0.2",
        "--n",
        "1",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!trace.exists());
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = repnet(&[
        "sweep",
        "--config",
        fixture("sweep.toml").to_str().unwrap(),
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_reruns_are_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("sweep.toml");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let ra = repnet(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
        "--workers",
        "1",
    ]);
    let rb = repnet(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--workers",
        "3",
        "--json",
    ]);
    assert!(ra.status.success(), "{}", stderr(&ra));
    let v = json(&rb);
    assert_eq!(keys(&v), ["files", "out", "taus"]);
    assert_eq!(v["taus"].as_array().unwrap().len(), 2);
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for name in names {
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap()
        );
    }
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary
        .starts_with("tau,p,runs,mean_b,mean_lifetime,mean_recovery,mean_rewired_fraction\n"));
}

#[test]
fn seed_flag_controls_randomness() {
    let run = |seed: &str| {
        stdout(&repnet(&[
            "simulate", "--m", "1", "--tau", "0.2", "--n", "15", "--t-max", "100", "--seed", seed,
        ]))
    };
    assert_eq!(run("4"), run("4"));
    assert_ne!(run("4"), run("5"));
    let trace = run("4");
    assert!(trace
        .starts_with("t,b_mean,lambda1,core_size,core_alive,departed,y_remaining,whole_network\n"));
    assert_eq!(trace.lines().count(), 101);
}

#[test]
fn simulate_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let v = json(&repnet(&[
        "simulate",
        "--m",
        "1",
        "--tau",
        "0.1",
        "--n",
        "12",
        "--t-max",
        "80",
        "--seed",
        "2",
        "--json",
        "--out",
        trace.to_str().unwrap(),
    ]));
    assert_eq!(
        keys(&v),
        [
            "final_b_mean",
            "lifetimes",
            "mean_b",
            "mean_lifetime",
            "mean_recovery",
            "mean_rewired_fraction",
            "n",
            "out",
            "p",
            "recoveries",
            "seed",
            "t_max",
            "tau"
        ]
    );
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 81);
}

#[test]
fn export_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("net.json");
    let out = repnet(&[
        "export",
        "--input",
        fixture("core_with_chain.csv").to_str().unwrap(),
        "--format",
        "json",
        "--out",
        snap.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&snap).unwrap()).unwrap();
    assert_eq!(keys(&v), ["b", "core", "edges", "lambda1", "n"]);
    assert_eq!(v["core"], serde_json::json!([0, 1, 2]));
    let dot = repnet(&[
        "export",
        "--input",
        snap.to_str().unwrap(),
        "--format",
        "dot",
    ]);
    let text = stdout(&dot);
    assert_eq!(text.matches("->").count(), 6);
    assert_eq!(text.matches("core=true").count(), 3);
}

#[test]
fn export_rejects_unknown_format() {
    let out = repnet(&[
        "export",
        "--input",
        fixture("zero3.txt").to_str().unwrap(),
        "--format",
        "graphml",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("graphml"));
}

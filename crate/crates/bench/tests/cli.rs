use std::path::Path;
use std::process::Command;

use compadmm_bench::config::ExperimentConfig;
use compadmm_bench::error::BenchError;
use compadmm_bench::experiment::run_experiment;
use compadmm_bench::trace_io::{read_trace, write_trace, without_wall_clock};
use compadmm_core::{Trace, TraceRow};

const SMALL: &str = r#"
seed = 3

[problem]
kind = "portfolio"
n_assets = 4
n_slots = 10
mu_r = 0.05
seed = 2

[[runs]]
id = "admm"
algo = "com-svr-admm"
epochs = 15
K = 5

[[runs]]
id = "svrg"
algo = "comp-svrg"
epochs = 15
K = 5

[[runs]]
id = "sgd"
algo = "sgd-const"
epochs = 100
record_every = 10
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compadmm"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn trace_round_trip_is_exact() {
    let mut t = Trace::new("awkward", "com-svr-admm");
    for (e, v) in [0.1, 1.0 / 3.0, 2.5e-300, f64::MAX].iter().enumerate() {
        t.rows.push(TraceRow {
            epoch: e as u64,
            oracle_calls: 7 * e as u64,
            objective: -v,
            objective_gap: (e % 2 == 0).then_some(*v),
            bregman_gap: Some(v / 7.0),
            feasibility: v * 1e-9,
            wall_ns: 123 * e as u64,
        });
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("awkward.csv");
    write_trace(&t, &path).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(back.run_id, "awkward");
    assert_eq!(back.rows, t.rows);
}

#[test]
fn malformed_trace_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "bad.csv",
        "epoch,oracle_calls,objective,objective_gap,bregman_gap,feasibility,wall_ns\n0,1,2,,,0,0\n1,x,2,,,0,0\n",
    );
    let msg = read_trace(&path).unwrap_err().to_string();
    assert!(msg.contains("bad.csv"), "{msg}");
}

#[test]
fn experiment_writes_traces_and_summary() {
    let cfg = ExperimentConfig::parse(SMALL, "small").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&cfg, dir.path(), 2).unwrap();
    assert_eq!(summary.outcomes.len(), 3);
    assert!(summary.reference_converged);
    for id in ["admm", "svrg", "sgd"] {
        let t = read_trace(&dir.path().join(format!("{id}.csv"))).unwrap();
        assert!(t.rows.len() > 1);
        let calls: Vec<u64> = t.rows.iter().map(|r| r.oracle_calls).collect();
        assert!(calls.windows(2).all(|w| w[0] < w[1]));
    }
    let text = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("run_id,rep,algorithm,seed,status"));
}

#[test]
fn thread_count_does_not_change_traces() {
    let mut cfg = ExperimentConfig::parse(SMALL, "small").unwrap();
    cfg.repetitions = 3;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg, a.path(), 1).unwrap();
    run_experiment(&cfg, b.path(), 4).unwrap();
    for id in ["admm", "svrg", "sgd"] {
        for rep in 0..3 {
            let name = format!("{id}-r{rep}.csv");
            let x = std::fs::read_to_string(a.path().join(&name)).unwrap();
            let y = std::fs::read_to_string(b.path().join(&name)).unwrap();
            assert_eq!(without_wall_clock(&x), without_wall_clock(&y), "{name}");
        }
    }
    // repetitions draw different streams
    let r0 = std::fs::read_to_string(a.path().join("admm-r0.csv")).unwrap();
    let r1 = std::fs::read_to_string(a.path().join("admm-r1.csv")).unwrap();
    assert_ne!(without_wall_clock(&r0), without_wall_clock(&r1));
}

#[test]
fn empty_run_list_is_a_parse_error_with_line() {
    let err = ExperimentConfig::parse("seed = 1\n[problem]\nkind = \"portfolio\"\nn_assets = 2\nn_slots = 3\n", "e.toml")
        .unwrap_err();
    assert!(matches!(err, BenchError::Parse { line: 1.., .. }), "{err:?}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn diverging_run_reports_exit_code_two() {
    let src = SMALL.replace("record_every = 10", "record_every = 10\neta = 1e6");
    assert_ne!(src, SMALL);
    let cfg = ExperimentConfig::parse(&src, "div").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&cfg, dir.path(), 1).unwrap_err();
    assert!(matches!(err, BenchError::Diverged { count: 1, .. }), "{err:?}");
    assert_eq!(err.exit_code(), 2);
    // the other runs still produced traces
    assert!(dir.path().join("svrg.csv").exists());
}

#[test]
fn cli_run_rate_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let run = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("summary.csv"));

    let rate = bin()
        .args(["rate", "--from", "1", "--to", "10", "--trace"])
        .arg(out.join("admm.csv"))
        .output()
        .unwrap();
    assert!(rate.status.success(), "{}", String::from_utf8_lossy(&rate.stderr));
    let text = String::from_utf8_lossy(&rate.stdout);
    let slope: f64 = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(slope < 0.0, "{text}");

    let svg = dir.path().join("plot.svg");
    let mut plot = bin();
    plot.args(["plot", "--axis", "oracle", "--out"]).arg(&svg);
    for id in ["admm", "svrg", "sgd"] {
        plot.arg(out.join(format!("{id}.csv")));
    }
    assert!(plot.output().unwrap().status.success());
    let body = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(body.matches("<polyline").count(), 3);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bin().args(["run", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let bad = write(dir.path(), "bad.toml", "seed = 1\n[problem]\nkind = \"nope\"\n");
    let parse = bin().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(parse.status.code(), Some(1));

    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

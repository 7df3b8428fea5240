use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn kcausal() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kcausal"));
    for var in ["KCAUSAL_GRID_MIN", "KCAUSAL_GRID_MAX", "KCAUSAL_GRID_N", "KCAUSAL_TOL"] {
        c.env_remove(var);
    }
    c
}

fn run(args: &[&str]) -> Output {
    kcausal().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

const GAUSS: &str = r#"{"kind": "gaussian", "nu": 1, "s0": 0.0, "p0": 0.0, "sigma": 1.0}"#;

#[test]
fn verify_axioms_with_defaults() {
    let out = run(&["verify-axioms"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let results = r["result"]["results"].as_array().unwrap();
    let mut ids: Vec<&str> = results.iter().map(|x| x["axiom_id"].as_str().unwrap()).collect();
    ids.dedup();
    assert!(ids.len() >= 8);
    assert!(results.iter().all(|x| x["pass"] == true));
    assert_eq!(r["config"]["grid"]["n_points"], 512);
}

#[test]
fn light_cone_outside_fails() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "c.json", r#"{"kind": "light_cone", "lambda": 1.2}"#);
    let out = run(&["cone-check", "--candidate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["result"]["in_cone"], false);
    let good = write(dir.path(), "d.json", r#"{"kind": "light_cone", "lambda": -1.0}"#);
    let out = run(&["cone-check", "--candidate", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn symbol_candidate_needs_hermiticity() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"kind": "symbol", "symbol": {"name": "gaussian",
        "params": {"q_center": 0.0, "q_width": 0.5, "beta_center": 0.0, "beta_width": 1.0}}}"#;
    let c = write(dir.path(), "c.json", body);
    let out = run(&["cone-check", "--candidate", c.to_str().unwrap(), "--grid-n", "64", "--no-refine"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hermitian"));
}

#[test]
fn identical_states_have_zero_slack() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", GAUSS);
    let out = run(&["state-causality", "--state1", s.to_str().unwrap(), "--state2", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["result"]["constraint_report"]["slack"], 0.0);
    assert_eq!(r["result"]["order_test"]["consistent"], true);
    assert_eq!(r["inputs"]["state1"]["sigma"], 1.0);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"grid_n": "many"}"#);
    let out = run(&["algebra-selftest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid_n"));

    assert_eq!(run(&["cone-check", "--candidate", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["algebra-selftest", "--kappa", "-1"]).status.code(), Some(2));

    let s = write(dir.path(), "s.json", GAUSS);
    let out = run(&["evolve", "--phi0", s.to_str().unwrap(), "--alpha", "1", "--dt", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let wide = write(dir.path(), "w.json", r#"{"kind": "gaussian", "nu": 1, "s0": 9.0, "p0": 0.0, "sigma": 1.0}"#);
    assert_eq!(run(&["evolve", "--phi0", wide.to_str().unwrap(), "--alpha", "1"]).status.code(), Some(2));
}

#[test]
fn single_thread_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = write(dir.path(), "a.json", GAUSS);
    let s2 = write(dir.path(), "b.json", r#"{"kind": "gaussian", "nu": 1, "s0": -0.5, "p0": 2.0, "sigma": 1.0}"#);
    let cases: Vec<Vec<&str>> = vec![
        vec!["algebra-selftest", "--seed", "7"],
        vec!["sweep", "--n-s", "5", "--n-p", "5"],
        vec!["state-causality", "--state1", s1.to_str().unwrap(), "--state2", s2.to_str().unwrap(), "--family", "6"],
    ];
    for args in cases {
        let mut a = args.clone();
        a.extend(["--threads", "1"]);
        let (x, y) = (run(&a), run(&a));
        assert_ne!(x.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&x.stderr));
        assert_eq!(x.status.code(), y.status.code());
        assert_eq!(x.stdout, y.stdout, "{args:?}");
        assert!(!x.stdout.is_empty());
    }
}

#[test]
fn reports_embed_the_config() {
    let out = kcausal()
        .args(["algebra-selftest", "--trials", "5", "--kappa", "2.5"])
        .env("KCAUSAL_GRID_N", "256")
        .env("KCAUSAL_TOL", "1e-11")
        .output()
        .unwrap();
    let r = json(&out);
    assert_eq!(r["config"]["grid"]["n_points"], 256);
    assert_eq!(r["config"]["kappa"], 2.5);
    assert_eq!(r["config"]["tolerances"]["algebra"], 1e-11);
    assert_eq!(r["inputs"]["trials"], 5);
}

#[test]
fn sweep_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run(&["sweep", "--n-s", "3", "--n-p", "4", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s0,p0,sigma,delta_P,delta_X,slack,satisfied"));
    assert_eq!(lines.count(), 12);
    let mut side = out_path.into_os_string();
    side.push(".config.json");
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
    assert_eq!(meta["command"], "sweep");
    assert!(meta.get("result").is_none());
}

#[test]
fn evolve_writes_trajectory_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", GAUSS);
    let traj = dir.path().join("traj.json");
    let out = run(&[
        "evolve",
        "--phi0",
        s.to_str().unwrap(),
        "--alpha",
        "-1",
        "--t-end",
        "0.2",
        "--dt",
        "1e-3",
        "--check",
        "zecomparaison",
        "--trajectory",
        traj.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let rep = &r["result"]["residual_report"];
    assert!(rep["max_residual"].as_f64().unwrap() <= 1e-5 * rep["scale"].as_f64().unwrap());
    let t: Value = serde_json::from_str(&std::fs::read_to_string(traj).unwrap()).unwrap();
    assert_eq!(t["frames"].as_array().unwrap().len(), 201);
    assert_eq!(t["alpha"], -1.0);

    let out = run(&[
        "evolve",
        "--phi0",
        s.to_str().unwrap(),
        "--alpha",
        "1",
        "--t-end",
        "0.2",
        "--dt",
        "1e-3",
        "--check",
        "condsuff",
        "--format",
        "csv",
    ]);
    // The transport solution does not satisfy the full condition at kappa = 1.
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("t,residual\n"));
}

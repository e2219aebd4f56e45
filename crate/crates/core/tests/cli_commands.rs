use std::fs;
use std::path::Path;
use std::process::Command;

use stiffnet::cli::{run_from, ModelSnapshot, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};

const SMALL: &str = r#"{
  "problem": {"name": "linear1", "lambda": 5},
  "grid": {"K": 2, "lambda_max": 10},
  "net": {"hidden_layers": 1, "width": 6},
  "train": {"S": 16, "iterations": 40, "lr": 0.01}
}"#;

fn run(args: &[&str]) -> (u8, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_from(std::iter::once("stiffnet").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn train_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = run(&["train", "--config", &cfg, "--out", out.to_str().unwrap(), "--svg"]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    assert!(stdout.contains("rel L2"));
    for f in ["loss.csv", "solution.csv", "model.json", "report.json", "config.json", "solution.svg"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let solution = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(solution.starts_with("t,yhat_1,ytruth_1\n"));
    assert_eq!(solution.lines().count(), 1002);
    assert!(!solution.contains('\r'));
    let loss = fs::read_to_string(out.join("loss.csv")).unwrap();
    assert!(loss.starts_with("iteration,loss\n0,"));
    assert_eq!(loss.lines().count(), 41);

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["iterations_run"], 40);
    assert_eq!(report["loss_history"].as_array().unwrap().len(), 40);

    let snap = ModelSnapshot::from_json(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    let model = snap.restore().unwrap();
    for line in solution.lines().skip(1).step_by(100) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(model.predict(cols[0]).unwrap()[0].to_bits(), cols[1].to_bits());
    }

    // the resolved config reproduces the run
    let resolved = fs::read_to_string(out.join("config.json")).unwrap();
    let again = dir.path().join("again");
    let cfg2 = dir.path().join("resolved.json");
    fs::write(&cfg2, resolved).unwrap();
    let (code, _, _) = run(&["train", "--config", cfg2.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(fs::read(out.join("loss.csv")).unwrap(), fs::read(again.join("loss.csv")).unwrap());
}

#[test]
fn zero_rates_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"grid": {"K": 0}}"#);
    let (code, _, err) = run(&["train", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("grid.K"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"train": {"iterations": 1, "momentum": 0.9}}"#);
    let (code, _, err) = run(&["train", "--config", &cfg]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("train") && err.contains("momentum"), "{err}");
}

#[test]
fn zero_iterations_writes_header_only_loss() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("\"iterations\": 40", "\"iterations\": 0"));
    let out = dir.path().join("out");
    let (code, _, err) = run(&["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(fs::read_to_string(out.join("loss.csv")).unwrap(), "iteration,loss\n");
}

#[test]
fn divergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("\"lr\": 0.01", "\"lr\": 1e300"));
    let out = dir.path().join("out");
    let (code, _, err) = run(&["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_NUMERICAL, "{err}");
    assert!(err.contains("diverged at iteration"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["diverged"]["iteration"].is_u64());
}

#[test]
fn oracle_prothero_starts_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["oracle", "--problem", "prothero", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let text = fs::read_to_string(dir.path().join("reference.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,y_1");
    assert_eq!(lines[1], "0,1");
    assert_eq!(lines.len(), 1002);
}

#[test]
fn oracle_linear1_matches_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["oracle", "--problem", "linear1", "--lambda", "100", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(dir.path().join("reference.csv")).unwrap();
    let row = text.lines().find(|l| l.starts_with("0.1,")).expect("row at t = 0.1");
    let y: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((y - 4.539993e-5).abs() < 1e-8, "{y}");
}

#[test]
fn oracle_unknown_problem_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(&["oracle", "--problem", "robertson", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn check_suites_pass() {
    for suite in ["grad", "dual"] {
        let (code, out, _) = run(&["check", "--suite", suite]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("PASS"));
    }
}

#[test]
fn binary_exit_codes_and_seed_precedence() {
    let exe = env!("CARGO_BIN_EXE_stiffnet");
    let status = Command::new(exe).arg("version").output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&status.stdout).starts_with("stiffnet "));
    assert_eq!(Command::new(exe).arg("bogus").output().unwrap().status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("\"iterations\": 40", "\"iterations\": 3, \"seed\": 1"));
    let seed_of = |out: &Path| -> u64 {
        let c: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
        c["train"]["seed"].as_u64().unwrap()
    };
    let train = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(exe);
        cmd.args(["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
        cmd.env_remove("STIFFNET_SEED");
        if let Some(e) = env {
            cmd.env("STIFFNET_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert_eq!(cmd.output().unwrap().status.code(), Some(0));
        seed_of(&out)
    };
    assert_eq!(train("file", None, None), 1);
    assert_eq!(train("env", Some("7"), None), 7);
    assert_eq!(train("flag", Some("7"), Some("9")), 9);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BINARY: &str = r#"{
  "grid": { "xmin": -20, "xmax": 40, "h": 1 },
  "branching": { "type": "constant", "pmfs": [[0, 0, 1]] },
  "displacement": { "family": "independent",
                    "marginal": { "type": "discrete", "points": [-1, 1], "weights": [0.5, 0.5] } }
}"#;

// one child per particle: the offspring mean is 1
const SINGLE_PATH: &str = r#"{
  "grid": { "xmin": -20, "xmax": 40, "h": 1 },
  "branching": { "type": "constant", "pmfs": [[0, 1]] },
  "displacement": { "family": "independent",
                    "marginal": { "type": "discrete", "points": [-1, 1], "weights": [0.5, 0.5] } }
}"#;

fn gbrw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbrw"))
        .args(args)
        .env_remove("GBRW_THREADS")
        .output()
        .expect("binary runs")
}

fn model(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn params_prints_a_bundle() {
    let out = gbrw(&[
        "params", "--k0", "2", "--m0", "1.9", "--eps0", "0.05", "--a", "1", "--M0", "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    for key in [
        "eps0", "eps1", "b", "M", "kappa", "a", "M0", "k0", "m0", "c1", "C",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["M"].as_f64().unwrap() > 100.0);
    assert_eq!(v["C"].as_f64(), Some(std::f64::consts::LN_2));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = gbrw(&["recurse", "--config", "missing.json", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(gbrw(&["simulate", "--bogus"]).status.code(), Some(2));
}

#[test]
fn params_out_of_range_is_a_usage_error() {
    let out = gbrw(&[
        "params", "--k0", "2", "--m0", "0.9", "--eps0", "0.05", "--a", "1", "--M0", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lyapunov_on_a_critical_model_fails_with_unmet_assumptions() {
    let dir = TempDir::new().unwrap();
    let cfg = model(&dir, "single.json", SINGLE_PATH);
    let out = gbrw(&[
        "verify",
        "lyapunov",
        "--config",
        s(&cfg),
        "--n",
        "5",
        "--eps0",
        "0.05",
        "--a",
        "1",
        "--M0",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    let unmet: Vec<&str> = v["unmet_assumptions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap())
        .collect();
    assert!(unmet.contains(&"B2"), "{unmet:?}");
    assert!(v["params_error"].is_string());
}

#[test]
fn lyapunov_on_binary_walk_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = model(&dir, "binary.json", BINARY);
    let out = gbrw(&[
        "verify",
        "lyapunov",
        "--config",
        s(&cfg),
        "--n",
        "8",
        "--eps0",
        "0.05",
        "--a",
        "1",
        "--M0",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let v = json(&out);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["grid"]["h"].as_f64(), Some(1.0));
    assert_eq!(v["options"]["n"], 8);
    assert_eq!(v["bounded"]["checks"][0]["check"], "lyapunov_bounded");
}

#[test]
fn recurse_writes_curves_and_a_report() {
    let dir = TempDir::new().unwrap();
    let cfg = model(&dir, "binary.json", BINARY);
    let csv = dir.path().join("curves.csv");
    let rep = dir.path().join("report.json");
    let out = gbrw(&[
        "recurse",
        "--config",
        s(&cfg),
        "--n",
        "4",
        "--out",
        s(&csv),
        "--report",
        s(&rep),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,x,lower,exact,upper"));
    // 5 generations times 61 grid points
    assert_eq!(lines.count(), 5 * 61);
    assert!(!text.contains('\r'));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["command"], "recurse");
    assert!(v["config"]["branching"]["pmfs"].is_array());
}

#[test]
fn recurse_rejects_unknown_modes() {
    let dir = TempDir::new().unwrap();
    let cfg = model(&dir, "binary.json", BINARY);
    let out = gbrw(&[
        "recurse",
        "--config",
        s(&cfg),
        "--n",
        "2",
        "--modes",
        "middle",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = model(&dir, "binary.json", BINARY);
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_gbrw"))
            .args([
                "simulate",
                "--config",
                s(&cfg),
                "--n",
                "4,8",
                "--reps",
                "3000",
                "--seed",
                "9",
                "--out",
                s(&path),
            ])
            .env("GBRW_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        std::fs::read(path).unwrap()
    };
    let one = run("1", "one.csv");
    let three = run("3", "three.csv");
    assert_eq!(one, three);
    let text = String::from_utf8(one).unwrap();
    assert!(text.starts_with("n,median,q_lo,q_hi,width,reps,seed\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn pwbounds_and_assumptions_pass_on_binary_walk() {
    let dir = TempDir::new().unwrap();
    let cfg = model(&dir, "binary.json", BINARY);
    let out = gbrw(&[
        "verify",
        "pwbounds",
        "--config",
        s(&cfg),
        "--n",
        "6",
        "--eta1",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["joint_tail_fit"]["b"].as_f64(), Some(1.0));
    let out = gbrw(&[
        "verify",
        "assumptions",
        "--config",
        s(&cfg),
        "--eps0",
        "0.05",
        "--a",
        "1",
        "--M0",
        "1",
        "--horizon",
        "6",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn report_bundles_every_section() {
    let dir = TempDir::new().unwrap();
    let cfg = model(&dir, "binary.json", BINARY);
    let path = dir.path().join("summary.json");
    let out = gbrw(&[
        "report",
        "--config",
        s(&cfg),
        "--n",
        "6",
        "--eps0",
        "0.05",
        "--a",
        "1",
        "--M0",
        "1",
        "--horizons",
        "3,6",
        "--reps",
        "4000",
        "--out",
        s(&path),
    ]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(out.status.code(), Some(0), "{v:#}");
    for section in [
        "sandwich",
        "assumptions",
        "lyapunov",
        "pwbounds",
        "simulation",
    ] {
        assert_eq!(v[section]["pass"], true, "{section}");
    }
    assert_eq!(
        v["simulation"]["tightness"]["rows"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
}

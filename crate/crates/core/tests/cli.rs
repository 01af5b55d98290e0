use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SCALAR: &str = r#"{"mode":"commutative","A":[[-1]],"B":[[0.5]],"x":[1],"eps_list":[0.01,0.0001],"mc":{"n_paths":4000,"seed":7}}"#;
const HEISENBERG: &str = r#"{"mode":"first_order","A":[[0,0,0],[0,0,1],[0,0,0]],"B":[[0,1,0],[0,0,0],[0,0,0]],"x":[0,0,1],"mc":{"n_paths":4000,"dt":0.01}}"#;
const SYNTHETIC: &str = r#"{"mode":"synthetic","alpha":[[0.2,0],[0,0.4]],"beta":[[0.3,0],[0,0.1]],"Gamma":[[-0.6,0],[0,-1.2]],"A":[[-1,0],[0,-2]],"x":[1,1],"eps_list":[1e-6]}"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbm-cutoff"))
        .args(args)
        .env("GBM_CUTOFF_THREADS", "2")
        .output()
        .unwrap()
}

fn config(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> Value {
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    serde_json::from_str(err.trim_end()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn analyze_scalar_schedule() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "scalar.json", SCALAR);
    let json: Value = serde_json::from_str(&stdout(&bin(&["analyze", "--config", &cfg]))).unwrap();
    let text = json.to_string();
    assert!(text.contains("t_eps"));
    let mut t_eps = Vec::new();
    collect(&json, "t_eps", &mut t_eps);
    assert_eq!(t_eps.len(), 2);
    for (t, eps) in t_eps.iter().zip([0.01f64, 1e-4]) {
        assert!((t - eps.ln().abs() / 0.75).abs() < 1e-12);
    }
}

fn collect(v: &Value, key: &str, out: &mut Vec<f64>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if k == key {
                    if let Some(f) = x.as_f64() {
                        out.push(f);
                    }
                }
                collect(x, key, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|x| collect(x, key, out)),
        _ => {}
    }
}

#[test]
fn analyze_csv_via_eps_override() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "scalar.json", SCALAR);
    let out = dir.path().join("schedule.csv");
    let o = bin(&[
        "analyze",
        "--config",
        &cfg,
        "--eps",
        "0.1,0.001",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout(&o).is_empty());
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 3);
    let col = rows[0].iter().position(|h| h == "t_eps").unwrap();
    let t: f64 = rows[2][col].parse().unwrap();
    assert!((t - 0.001f64.ln().abs() / 0.75).abs() < 1e-12);
}

#[test]
fn hypotheses_on_heisenberg() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "h.json", HEISENBERG);
    let text = stdout(&bin(&["hypotheses", "--config", &cfg]));
    let json: Value = serde_json::from_str(&text).unwrap();
    let flag = |k: &str| find_bool(&json, k).unwrap();
    assert!(!flag("normal_B"));
    assert!(!flag("normal_C"));
    assert!(!flag("commutative"));
    assert!(!flag("first_order"));
    assert!(flag("hypothesis_set_infeasible"));
}

fn find_bool(v: &Value, key: &str) -> Option<bool> {
    match v {
        Value::Object(m) => m
            .get(key)
            .and_then(Value::as_bool)
            .or_else(|| m.values().find_map(|x| find_bool(x, key))),
        Value::Array(a) => a.iter().find_map(|x| find_bool(x, key)),
        _ => None,
    }
}

#[test]
fn verify_passes_on_scalar() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "s.json", SCALAR);
    let rows = csv_rows(&stdout(&bin(&["verify", "--config", &cfg])));
    let col = rows[0].iter().position(|h| h == "pass").unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r[col] == "true"), "{rows:?}");
}

#[test]
fn heisenberg_has_no_mode_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "h.json", HEISENBERG);
    assert_eq!(
        error_json(&bin(&["verify", "--config", &cfg]))["error"],
        "no_stabilizer"
    );
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "s.json", SCALAR);
    let a = stdout(&bin(&["mean-square", "--config", &cfg, "--seed", "11"]));
    let b = Command::new(env!("CARGO_BIN_EXE_gbm-cutoff"))
        .args(["mean-square", "--config", &cfg, "--seed", "11"])
        .env("GBM_CUTOFF_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a, stdout(&b));
    let c = stdout(&bin(&["mean-square", "--config", &cfg, "--seed", "12"]));
    assert_ne!(a, c);
}

#[test]
fn synthetic_mixing_and_profile() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "syn.json", SYNTHETIC);
    let rows = csv_rows(&stdout(&bin(&["mixing", "--config", &cfg])));
    assert_eq!(
        rows[0],
        ["eps", "delta", "tau", "tau_over_t_eps", "tau_ratio"]
    );
    let rows = csv_rows(&stdout(&bin(&["profile", "--config", &cfg])));
    let col = rows[0].iter().position(|h| h == "normalized").unwrap();
    let values: Vec<f64> = rows[1..].iter().map(|r| r[col].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
    let e = error_json(&bin(&["verify", "--config", &cfg]));
    assert_eq!(e["error"], "unsupported_mode");
}

#[test]
fn example35_needs_no_config() {
    let rows = csv_rows(&stdout(&bin(&["example35"])));
    assert_eq!(rows.len(), 101);
    let g = rows[0].iter().position(|h| h == "g_error").unwrap();
    assert!(rows[1..]
        .iter()
        .all(|r| r[g].parse::<f64>().unwrap() < 1e-8));
}

#[test]
fn errors_are_single_json_lines() {
    let dir = TempDir::new().unwrap();
    let e = error_json(&bin(&["analyze"]));
    assert_eq!(e["error"], "missing_config");

    let bad = config(
        &dir,
        "bad.json",
        r#"{"mode":"commutative","A":[[-1]],"x":[1]}"#,
    );
    assert_eq!(
        error_json(&bin(&["analyze", "--config", &bad]))["error"],
        "missing_matrix"
    );

    let cfg = config(&dir, "s.json", SCALAR);
    assert_eq!(
        error_json(&bin(&["analyze", "--config", &cfg, "--eps", "2"]))["error"],
        "invalid_eps"
    );

    let o = bin(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "usage");
}

#[test]
fn failed_run_leaves_existing_output() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "s.json", SCALAR);
    let out = dir.path().join("r.csv");
    std::fs::write(&out, "previous").unwrap();
    error_json(&bin(&[
        "analyze",
        "--config",
        &cfg,
        "--eps",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "previous");
    stdout(&bin(&[
        "analyze",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]));
    let written = std::fs::read_to_string(&out).unwrap();
    assert!(written.starts_with("regime,eps,"));
    assert!(no_stray_files(dir.path()));
}

fn no_stray_files(dir: &Path) -> bool {
    std::fs::read_dir(dir).unwrap().count() == 2
}

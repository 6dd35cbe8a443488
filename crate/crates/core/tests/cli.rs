use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_quenchlab");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs"))
}

fn run(args: &[&str], out: &Path) -> i32 {
    let status = Command::new(BIN).args(args).arg("--out").arg(out).env_remove("QUENCHLAB_THREADS").status().unwrap();
    status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Rows of a CSV file written by the tool: the config comment line is
/// skipped and every cell must parse as a float.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(|c| c.parse::<f64>().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn stationary_writes_fields_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["stationary", "--config", configs().join("minimal.toml").to_str().unwrap()], dir.path());
    assert_eq!(code, 0);
    let v = read_json(&dir.path().join("stationary.json"));
    assert_eq!(v["verdict"], "in_lambda");
    assert!(v["max_w"].as_f64().unwrap() < 1.0);
    assert_eq!(v["config"]["model"]["lambda"], 0.5);
    let (header, rows) = read_csv(&dir.path().join("stationary_fields.csv"));
    assert_eq!(header, ["x", "w", "z"]);
    assert_eq!(rows.len(), 199);
    let first = fs::read_to_string(dir.path().join("stationary_fields.csv")).unwrap();
    assert!(first.starts_with("# config={"));
}

#[test]
fn outside_parameters_report_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["stationary", "--override", "model.lambda=12", "--override", "model.mu=12"], dir.path());
    assert_eq!(code, 0);
    let v = read_json(&dir.path().join("stationary.json"));
    assert_eq!(v["verdict"], "not_in_lambda");
    assert_eq!(v["evidence"]["kind"], "analytic_bound");
    assert!(!dir.path().join("stationary_fields.csv").exists());
}

#[test]
fn malformed_key_exits_two_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["stationary", "--override", "run.horizn=3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("run.horizn"), "{stderr}");
    let v = read_json(&dir.path().join("error.json"));
    assert_eq!(v["key"], "run.horizn");
}

#[test]
fn eigen_decoupled_hook() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["eigen", "--override", "run.decoupled=true"], dir.path()), 0);
    let v = read_json(&dir.path().join("eigen.json"));
    let nu1 = v["nu1"].as_f64().unwrap();
    assert!((nu1 - std::f64::consts::PI.powi(2)).abs() < 1e-3, "{nu1}");
    let (header, rows) = read_csv(&dir.path().join("eigen.csv"));
    assert_eq!(header, ["x", "phi1", "psi1"]);
    assert!(rows.iter().all(|r| r[1] > 0.0 && r[2] > 0.0));
}

#[test]
fn simulate_quench_row_and_bitwise_reruns() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("quench.toml");
    let args = ["simulate", "--config", cfg.to_str().unwrap()];
    assert_eq!(run(&args, a.path()), 0);
    assert_eq!(run(&args, b.path()), 0);
    let v = read_json(&a.path().join("simulate.json"));
    assert_eq!(v["result"]["status"], "quenched");
    assert!(v["result"]["t_q"].as_f64().unwrap() > 0.0);
    for f in ["trajectory.csv", "snapshots.csv", "simulate.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let (header, rows) = read_csv(&a.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "max_u", "max_v", "ut_l2", "vt_l2", "energy", "dist2_u", "dist2_v", "dt"]);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!(rows.iter().all(|r| r[1] < 1.0 && r[2] < 1.0));
    let (sh, _) = read_csv(&a.path().join("snapshots.csv"));
    assert_eq!(sh, ["t", "x", "u", "v"]);
}

#[test]
fn curve_rows_and_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(BIN)
        .args(["curve", "--override", "run.lambda_samples=[0.5, 1.0, 20.0]", "--override", "domain.n=49", "--out"])
        .arg(dir.path())
        .env("QUENCHLAB_THREADS", "2")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "lambda,mu_lo,mu_hi,gamma,status");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].ends_with("no_bracket") && lines[4].contains("NaN"));
    let v = read_json(&dir.path().join("curve.json"));
    let d = v["diagonal"]["lo"].as_f64().unwrap();
    assert!((d - 1.40).abs() < 0.02, "{d}");
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("quench_bound.toml");
    assert_eq!(run(&["certify", "--config", cfg.to_str().unwrap()], dir.path()), 0);
    let v = read_json(&dir.path().join("certificate.json"));
    assert_eq!(v["case"]["case"], "c");
    assert_eq!(v["verification"]["passed"], true);

    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["certify", "--override", "model.lambda=12", "--override", "model.mu=12"], dir.path()), 0);
    assert_eq!(read_json(&dir.path().join("certificate.json"))["case"]["case"], "b");

    let dir = tempfile::tempdir().unwrap();
    let code = run(&["certify", "--override", "run.initial={recipe = \"sine\", amp_u = 0.3, amp_v = 0.0}"], dir.path());
    assert_eq!(code, 2);
    assert_eq!(read_json(&dir.path().join("certificate.json"))["case"]["case"], "none_established");
}

#[test]
fn rate_certificate_passes_on_default_run() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["rate", "--config", configs().join("rate.toml").to_str().unwrap()], dir.path()), 0);
    let v = read_json(&dir.path().join("rate.json"));
    let c = &v["certificate"];
    assert!(c["fitted_slope"].as_f64().unwrap() >= 0.95 * c["gamma_proof"].as_f64().unwrap());
    assert!(c["gamma_theorem"].as_f64().unwrap() >= c["gamma_proof"].as_f64().unwrap());
}

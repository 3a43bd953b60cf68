use std::path::Path;
use std::process::{Command, Output};

use vfsense::io::{read_curve_csv, write_matrix_csv};
use vfsense_core::oracle::toy_value;
use vfsense_core::DenseMatrix;

fn vfsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vfsense"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

const SMALL: [&str; 8] = ["--m", "30", "--n", "40", "--k", "3", "--outliers", "2"];

#[test]
fn toy_curve_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = vfsense(&["pareto-curve", "--toy", "--points", "13", "--out", &out_arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_curve_csv(&dir.path().join("curve.csv")).unwrap();
    assert_eq!(rows.len(), 13);
    for r in &rows {
        assert!((r.v - toy_value(r.tau)).abs() <= 1e-6, "tau = {}: {} vs {}", r.tau, r.v, toy_value(r.tau));
    }
}

#[test]
fn solve_from_files_reaches_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_matrix_csv(&a, &DenseMatrix::identity(2)).unwrap();
    std::fs::write(&b, "2\n1\n").unwrap();
    let out = vfsense(&[
        "solve",
        "--matrix",
        a.to_str().unwrap(),
        "--rhs",
        b.to_str().unwrap(),
        "--sigma",
        "0.25",
        "--regularizer",
        "l1",
        "--misfit",
        "least-squares",
        "--out",
        &out_arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let tau = summary["trace"]["tau_star"].as_f64().unwrap();
    let v = summary["sample"]["value"].as_f64().unwrap();
    // Default solver rtol is 1e-8 on v; the slope at τ = 2 is −1/2.
    assert!((v - 0.25).abs() <= 1e-8, "{v}");
    assert!((tau - 2.0).abs() <= 3e-8, "{tau}");
    assert!(dir.path().join("trace.csv").exists());
    assert!(dir.path().join("signals.csv").exists());
}

#[test]
fn synthetic_solve_and_experiment_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["solve"];
    args.extend(SMALL);
    let solve_dir = dir.path().join("solve");
    let solve_out = out_arg(&solve_dir);
    args.extend(["--out", &solve_out]);
    let out = vfsense(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["summary.json", "signals.csv", "trace.csv"] {
        assert!(solve_dir.join(f).exists(), "{f}");
    }

    let exp_dir = dir.path().join("exp");
    let exp_out = out_arg(&exp_dir);
    let mut args = vec!["experiment", "--replicates", "2", "--seed", "5"];
    args.extend(SMALL);
    args.extend(["--out", &exp_out]);
    let out = vfsense(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(exp_dir.join("summary.json").exists());
    assert!(exp_dir.join("seed-5").join("signals.csv").exists());
    assert!(exp_dir.join("seed-6").join("trace.csv").exists());
}

#[test]
fn verify_passes_on_small_instance() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["verify"];
    args.extend(SMALL);
    let d = out_arg(dir.path());
    args.extend(["--out", &d]);
    let out = vfsense(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verification.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
}

#[test]
fn configuration_errors_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "k = 10\nn = 5\n").unwrap();
    let out = vfsense(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let out = vfsense(&["solve", "--misfit", "huber:kappa=-1"]);
    assert_eq!(out.status.code(), Some(3));

    let out = vfsense(&["solve", "--sigma", "1.0"]);
    assert_eq!(out.status.code(), Some(3));

    let out = vfsense(&["solve", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pbgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbgd")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_quadratic_writes_summary_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pbgd(&["solve", "--problem", "quadratic", "--algo", "v-pbgd", "--gamma", "10", "--auto-steps", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_json(&dir.path().join("summary.json"));
    let y = s["final_y"][0].as_f64().unwrap();
    assert!((y + 0.05).abs() < 1e-6, "final_y = {y}");
    for key in ["config", "termination", "final_x", "final_metrics", "library_version", "seed"] {
        assert!(!s[key].is_null(), "summary lacks {key}");
    }
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "k,f_value,penalty_value,F_gamma,proj_grad_norm_sq,inner_iters,elapsed_ns");
    assert_eq!(trace.lines().count() - 1, s["iterations"].as_u64().unwrap() as usize);
}

#[test]
fn seeded_solves_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = pbgd(&[
            "solve", "--problem", "toy-nc", "--algo", "v-pbgd", "--gamma", "10", "--seed", "7", "--x0", "1.5", "--y0",
            "-0.5", "--max-iters", "500", "--out", d.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("trace.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn pbpl_without_hessian_products_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pbgd(&["solve", "--problem", "quadratic", "--algo", "pbpl", "--no-jacobian", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error:"), "{}", stderr(&o));
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"problem": "quadratic", "algorithm": "v-pbgd", "solver": {"gamma": 1.0}}"#).unwrap();
    let out = dir.path().join("o");
    let o = pbgd(&["solve", "--config", cfg.to_str().unwrap(), "--gamma", "100", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_json(&out.join("summary.json"));
    assert_eq!(s["config"]["solver"]["gamma"].as_f64(), Some(100.0));
    assert!((s["final_y"][0].as_f64().unwrap() + 0.005).abs() < 1e-6);
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pbgd(&["check", "all", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = read_json(&dir.path().join("checks.json"));
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c.get("worst_residual").is_some()));

    let o = pbgd(&["check", "quadratic", "--rho", "0.5", "--kind", "value-gap", "--out", out]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn sweep_needs_three_gammas() {
    let dir = tempfile::tempdir().unwrap();
    let o = pbgd(&["sweep", "--problem", "quadratic", "--gammas", "1,10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(">= 3"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_rows_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = pbgd(&[
        "sweep", "--problem", "quadratic", "--gammas", "1,10,100", "--y0", "1", "--tol", "1e-6", "--max-iters", "20000",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let slopes = read_json(&dir.path().join("slopes.json"));
    let s = slopes["penalty_vs_gamma"].as_f64().unwrap();
    assert!((s + 2.0).abs() < 1e-3, "slope {s}");
    let rows = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);
}

#[test]
fn hyperclean_without_noise_reports_no_separation() {
    let dir = tempfile::tempdir().unwrap();
    let o = pbgd(&["hyperclean", "--noise", "0", "--max-iters", "200", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("separation            n/a"));
    let r = read_json(&dir.path().join("hyperclean.json"));
    assert!(r["separation"].is_null());
    assert!(r["corrupted_mean_weight"].is_null());
    let weights = std::fs::read_to_string(dir.path().join("weights.csv")).unwrap();
    assert_eq!(weights.lines().count(), 201);
}

#[test]
fn hyperclean_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = pbgd(&["hyperclean", "--seed", "3", "--max-iters", "300", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["weights.csv", "hyperclean.json", "trace.csv"] {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn diverging_run_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = pbgd(&[
        "solve", "--problem", "quadratic", "--algo", "v-pbgd", "--gamma", "10", "--alpha", "1", "--y0", "1", "--max-iters",
        "1000", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
    let s = read_json(&dir.path().join("summary.json"));
    assert_eq!(s["termination"], "diverged");
}

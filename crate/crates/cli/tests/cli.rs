use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metric-scale"))
        .args(args)
        .env_remove("METRIC_SCALE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn invalid_config_is_rejected_before_running() {
    for args in [
        &["--command", "verify", "--lambda", "0"][..],
        &["--command", "frechet", "--manifold", "hyperbolic:2"],
        &["--command", "geodesic", "--chart", "torus"],
    ] {
        let out = bin(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn verify_at_unit_lambda_reports_unit_factors() {
    let report = json(&["--command", "verify", "--lambda", "1"]);
    assert_eq!(report["summary"]["failed"], 0);
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len() as u64, report["summary"]["registered"].as_u64().unwrap());
    let mut with_factor = 0;
    for r in records {
        if !r["observed_factor"].is_null() {
            assert_eq!(num(&r["observed_factor"]), 1.0, "{}", r["id"]);
            with_factor += 1;
        }
    }
    assert!(with_factor >= 5);
    let negative = records.iter().find(|r| r["id"] == "chart.nonconstant_negative").unwrap();
    assert_eq!(negative["expected_failure"], true);
    assert_eq!(negative["pass"], true);
}

#[test]
fn verify_csv_is_deterministic() {
    let a = bin(&["--command", "verify", "--format", "csv", "--seed", "9", "--lambda", "2.5"]);
    let b = bin(&["--command", "verify", "--format", "csv", "--seed", "9", "--lambda", "2.5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("id,section,subject,"));
}

#[test]
fn frechet_trace_csv_is_deterministic() {
    let args = ["--command", "frechet", "--manifold", "spd:2", "--points", "4", "--iters", "30", "--format", "csv"];
    let a = bin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, bin(&args).stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "iter,f_value,grad_norm,coord_0,coord_1,coord_2,coord_3");
    assert_eq!(text.lines().count(), 32);
}

#[test]
fn frechet_equivalence_flag() {
    let out = json(&[
        "--command", "frechet", "--manifold", "sphere:2", "--points", "2", "--lambda", "4", "--eta", "0.1",
        "--check-equivalence",
    ]);
    assert!(num(&out["equivalence_deviation"]) <= 1e-8);
}

#[test]
fn frechet_single_point() {
    let out = json(&["--command", "frechet", "--manifold", "spd:2", "--points", "1", "--eta", "0.5"]);
    assert_eq!(out["stop_reason"], "converged");
    assert!(num(&out["final_value"]) <= 1e-20);
}

#[test]
fn calibrate_recovers_squared_target() {
    for (c, want) in [("1", 1.0), ("3", 9.0), ("0.5", 0.25)] {
        let out = json(&["--command", "calibrate", "--scale-target", c, "--manifold", "sphere:2"]);
        let got = num(&out["lambda_star"]);
        assert!((got - want).abs() <= 1e-10 * want, "c = {c}: {got}");
        assert!(num(&out["residual"]) <= 1e-10);
        assert!(num(&out["equivalence_deviation"]) <= 1e-8);
    }
}

#[test]
fn geodesic_examples() {
    let cases: [(&[&str], f64); 3] = [
        (&["--chart", "euclidean:2", "--lambda", "3"], 0.0),
        (&["--chart", "sphere-chart", "--lambda", "10"], 1e-8),
        (&["--chart", "polar", "--lambda", "7"], 1e-12),
    ];
    for (extra, tol) in cases {
        let mut args = vec!["--command", "geodesic"];
        args.extend_from_slice(extra);
        let out = json(&args);
        assert!(num(&out["max_deviation"]) <= tol, "{extra:?}");
        assert_eq!(out["rows"].as_array().unwrap().len(), 2002);
    }
    let line = json(&["--command", "geodesic", "--chart", "euclidean:2", "--x0", "1,2", "--v0", "3,-1"]);
    let last = line["rows"].as_array().unwrap().last().unwrap();
    assert!((num(&last["x"][0]) - 4.0).abs() <= 1e-12);
    assert!((num(&last["x"][1]) - 1.0).abs() <= 1e-12);
}

#[test]
fn geodesic_domain_exit_writes_partial_path() {
    let out = bin(&["--command", "geodesic", "--chart", "polar", "--x0", "9,0", "--v0", "5,0", "--lambda", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["complete"], false);
    assert!(!v["rows"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_metric-scale"))
        .args(["--command", "scale-table", "--lambda", "4", "--format", "csv"])
        .env("METRIC_SCALE_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("scale-table.csv")).unwrap();
    assert!(text.contains("volume,lambda^(n/2),8.0000000000000000e0"));

    let explicit = dir.path().join("nested/table.json");
    let out = bin(&["--command", "scale-table", "--out", explicit.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(explicit.exists());
}

use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stratint")).args(args).output().expect("spawn stratint")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn coeffs_unit_double_kernel() {
    let j = stdout_json(&run(&["coeffs", "--p", "1", "1"]));
    let values = j["table"]["values"].as_array().unwrap();
    assert!((f(&values[0]) - 0.5).abs() < 1e-14);
    let s = 0.5 / 3f64.sqrt();
    // [j1=0, j2=1] and [j1=1, j2=0]
    assert!((f(&values[1]) - s).abs() < 1e-14);
    assert!((f(&values[2]) + s).abs() < 1e-14);
    assert!((f(&j["trace"]["partial_sum"]) - 0.5).abs() < 1e-14);
    assert!((f(&j["trace"]["target"]) - 0.5).abs() < 1e-14);
}

#[test]
fn coeffs_single_kernel_csv() {
    let out = run(&["coeffs", "--p", "4", "--interval", "0", "4", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config {"));
    assert_eq!(lines.next(), Some("j1,value"));
    let rows: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rows.len(), 5);
    assert!((rows[0] - 2.0).abs() < 1e-13);
    assert!(rows[1..].iter().all(|v| v.abs() < 1e-13));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("table.json");
    std::fs::write(&cfg, r#"{"p": [2, 3], "weights": ["m:1", "1"], "format": "csv"}"#).unwrap();
    let o = run(&["coeffs", "--config", cfg.to_str().unwrap(), "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let j: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(j["config"]["p"], serde_json::json!([2, 3]));
    assert_eq!(j["config"]["format"], "json");
    assert_eq!(j["table"]["values"].as_array().unwrap().len(), 12);
    assert_eq!(j["config"]["weights"][0]["form"], "monomial");

    std::fs::write(&cfg, r#"{"p": [2], "colour": "red"}"#).unwrap();
    assert_eq!(run(&["coeffs", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["catalog", "--tag", "I99"],
        vec!["catalog"],
        vec!["coeffs"],
        vec!["coeffs", "--p", "2", "--bogus"],
        vec!["coeffs", "--p", "2", "2", "--k", "3"],
        vec!["coeffs", "--p", "2", "--weights", "x:1"],
        vec!["coeffs", "--p", "2", "--interval", "1", "0"],
        vec!["converge", "--scheme", "rk4"],
        vec!["converge", "--levels", "6", "3"],
        vec!["catalog", "--tag", "I10", "--trig", "--check"],
        vec!["catalog", "--tag", "I02", "--trig"],
        vec!["validate", "--tag", "I00", "--kind", "strat"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn catalog_check_reports_tiny_residual() {
    let j = stdout_json(&run(&["catalog", "--tag", "I20", "--indices", "1", "2", "--q", "6", "--check", "--check-pools", "20"]));
    assert!(f(&j["residual"]) < 1e-10);
    assert!(f(&j["second_moment"]) > 0.0);
    assert!(j["value"].is_number());
}

#[test]
fn trig_and_legendre_moments_agree_within_one_percent() {
    let j = stdout_json(&run(&["catalog", "--tag", "I10", "--indices", "1", "2", "--q", "30", "--trig"]));
    assert!(f(&j["relative_difference"]) < 0.01, "{}", j["relative_difference"]);
}

#[test]
fn validate_passes_and_fails_on_threshold() {
    let base = ["validate", "--indices", "1", "2", "--q", "60", "--n-paths", "200", "--n-steps", "4000"];
    let j = stdout_json(&run(&base));
    assert_eq!(j["pass"], true);
    let r = &j["reports"][0];
    // the distinct-component law 1/(4(2q+1)) at q = 60
    let law = 1.0 / 484.0;
    assert!((f(&r["mean_sq_diff"]) - law).abs() < 4.0 * f(&r["std_err"]));
    let mut strict = base.to_vec();
    strict.extend(["--threshold", "1e-6"]);
    let o = run(&strict);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.starts_with(b"{"));
}

#[test]
fn converge_expect_window_sets_exit_code() {
    let base = ["converge", "--levels", "3", "5", "--n-paths", "100", "--seed", "4"];
    let o = run(&base);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let mut narrow = base.to_vec();
    narrow.extend(["--expect", "5", "6"]);
    assert_eq!(run(&narrow).status.code(), Some(1));
    let mut wide = base.to_vec();
    wide.extend(["--expect", "-10", "10", "--format", "json"]);
    let j = stdout_json(&run(&wide));
    assert_eq!(j["report"]["errors"].as_array().unwrap().len(), 3);
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["catalog", "--tag", "I11", "--indices", "2", "1", "--seed", "7"],
        vec!["converge", "--problem", "bilinear", "--scheme", "milstein", "--q", "3", "--levels", "2", "4", "--n-paths", "20"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn thread_count_env_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_stratint"))
        .args(["catalog", "--tag", "I1"])
        .env("STRATINT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn multi_value_flags_take_negative_numbers_but_stop_at_flags() {
    let j = stdout_json(&run(&["coeffs", "--p", "2", "2", "--weights", "m:1", "-2", "--interval", "-1", "1"]));
    assert_eq!(j["config"]["interval"]["start"], -1.0);
    assert_eq!(j["config"]["weights"][1]["value"], -2.0);
    // (t - τ)·(-2) integrated over the ordered simplex on [-1, 1]: -2·∫∫_{τ1<τ2} (-1 - τ1) = 8/3
    assert!((f(&j["table"]["values"][0]) * 2.0 - 8.0 / 3.0).abs() < 1e-13);
}

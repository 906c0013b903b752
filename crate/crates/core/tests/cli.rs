use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn d4cond(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_d4cond"))
        .args(args)
        .env_remove("D4COND_CACHE_DIR")
        .output()
        .expect("run d4cond")
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn both_methods_agree_at_500() {
    let out = d4cond(&["count", "--x", "500", "--method", "both"]);
    assert_eq!(out.status.code(), Some(0));
    let reports = json_lines(&out);
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["method"], "oracle");
    assert_eq!(reports[1]["method"], "hyperbola");
    assert_eq!(reports[0]["n_exact"], reports[1]["n_exact"]);
}

#[test]
fn nothing_below_conductor_three() {
    let out = d4cond(&["count", "--x", "3", "--method", "oracle"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_lines(&out)[0]["n_exact"], 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(d4cond(&["count", "--x", "-1"]).status.code(), Some(1));
    assert_eq!(d4cond(&["count", "--x", "0"]).status.code(), Some(1));
    assert_eq!(d4cond(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(d4cond(&["fit", "--grid", "100,50"]).status.code(), Some(1));
    assert_eq!(d4cond(&["--help"]).status.code(), Some(0));
}

#[test]
fn resource_cap_exits_three() {
    let out = d4cond(&["count", "--x", "100000000000"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_spec_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let cases = [
        "{\"2\": {\"K\": [\"1\"]",
        "{\"4\": {\"K\": [\"1\"]}}",
        "{\"3\": {\"K\": [\"q\"]}}",
        "{\"inf\": [\"R3\"]}",
        "[1, 2]",
    ];
    for (i, text) in cases.iter().enumerate() {
        let spec = dir.path().join(format!("spec{i}.json"));
        fs::write(&spec, text).unwrap();
        let out = d4cond(&[
            "count",
            "--x",
            "100",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(1), "spec {text}");
        assert!(!out_path.exists(), "spec {text} left output behind");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    }
    let missing = d4cond(&["count", "--x", "100", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn restricted_spec_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"3": {"K": ["1", "u"]}, "inf": ["C"]}"#).unwrap();
    let out = d4cond(&[
        "count",
        "--x",
        "2000",
        "--method",
        "both",
        "--spec",
        spec.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let reports = json_lines(&out);
    let full = json_lines(&d4cond(&["count", "--x", "2000"]));
    let n = reports[0]["n_exact"].as_u64().unwrap();
    assert!(n > 0 && n < full[0]["n_exact"].as_u64().unwrap());
}

#[test]
fn cache_changes_nothing_but_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let plain = d4cond(&["count", "--x", "3000", "--method", "both"]);
    let c = cache.to_str().unwrap();
    let a = ["count", "--x", "3000", "--method", "both", "--cache-dir", c];
    let first = d4cond(&a);
    let second = d4cond(&a);
    assert_eq!(plain.stdout, first.stdout);
    assert_eq!(first.stdout, second.stdout);
    let file = cache.join("d4hits.jsonl");
    let lines_after_first = fs::read_to_string(&file).unwrap().lines().count();
    assert!(lines_after_first > 0);
    assert_eq!(
        fs::read_to_string(&file).unwrap().lines().count(),
        lines_after_first
    );

    // A corrupt line is reported and skipped, never fatal.
    let mut text = fs::read_to_string(&file).unwrap();
    text.push_str("{not json\n");
    fs::write(&file, text).unwrap();
    let third = d4cond(&a);
    assert_eq!(third.status.code(), Some(0));
    assert_eq!(third.stdout, plain.stdout);
    assert!(String::from_utf8_lossy(&third.stderr).contains("corrupt cache line"));
}

#[test]
fn tables2_formats() {
    let out = d4cond(&["tables2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("table,d_k_mod8,v2_rel,v2_flip,weight\n"));
    assert!(text.contains("1,1,0,0,1/2\n"));
    assert!(text.contains("2,5,4,2,1/16\n"));
    assert!(text.contains("4,0,5,3,1/32\n"));
}

#[test]
fn constants_print_exact_masses() {
    let out = d4cond(&["constants", "--p-max", "10000", "--t", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sum_i mu(Sigma_2^2i) = 5/2"));
    assert!(text.contains("sum_i i mu(Sigma_2^2i) = 11/16"));
    assert!(text.contains("two_adic_log2_coefficient = 7/20"));
}

#[test]
fn quadcount_over_q_and_over_k() {
    let out = d4cond(&["quadcount", "--x", "10000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = &json_lines(&out)[0];
    assert!((v["ratio"].as_f64().unwrap() - 1.0).abs() < 0.02);
    let out = d4cond(&["quadcount", "--x", "5000", "--over", "-4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = &json_lines(&out)[0];
    assert_eq!(v["base"], -4);
    assert!((v["ratio"].as_f64().unwrap() - 1.0).abs() < 0.1);
}

#[test]
fn out_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("fit.csv");
    let out = d4cond(&[
        "fit",
        "--grid",
        "200,400",
        "--t",
        "0",
        "--csv",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 3);
}

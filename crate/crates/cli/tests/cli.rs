use std::path::Path;
use std::process::{Command, Output};

use itrpower_cli::output::{parse_csv, CSV_HEADER};

fn itrpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itrpower"))
        .args(args)
        .env_remove("ITRPOWER_THREADS")
        .output()
        .expect("binary runs")
}

fn short_run(dir: &Path, name: &str, extra: &[&str]) -> (Output, String, serde_json::Value) {
    let csv = dir.join(format!("{name}.csv"));
    let json = dir.join(format!("{name}.json"));
    let mut args = vec![
        "run",
        "--model",
        "ising",
        "--rank",
        "4",
        "--t-min",
        "1e-2",
        "--out",
        csv.to_str().unwrap(),
        "--summary",
        json.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = itrpower(&args);
    let text = std::fs::read_to_string(&csv).unwrap_or_default();
    let summary = std::fs::read_to_string(&json)
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
        .unwrap_or(serde_json::Value::Null);
    (out, text, summary)
}

#[test]
fn exact_prints_the_reference() {
    let out = itrpower(&["exact", "--model", "ising", "--g", "2"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        "-2.127088819946730"
    );
}

#[test]
fn exit_codes_distinguish_usage_from_success() {
    assert_eq!(itrpower(&["--version"]).status.code(), Some(0));
    assert_eq!(itrpower(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        itrpower(&["exact", "--model", "heisenberg-s1", "--delta", "0.3"])
            .status
            .code(),
        Some(1)
    );
    let out = itrpower(&[
        "run",
        "--model",
        "heisenberg-half",
        "--g",
        "1",
        "--rank",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--g"));
}

#[test]
fn unwritable_output_reports_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("run.csv");
    let out = itrpower(&[
        "run",
        "--model",
        "ising",
        "--rank",
        "2",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(target.to_str().unwrap()));
}

#[test]
fn bad_thread_variable_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_itrpower"))
        .args(["run", "--model", "ising", "--rank", "2"])
        .env("ITRPOWER_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text, summary) = short_run(dir.path(), "a", &["--theta-hat"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let rows = parse_csv(&text).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.err.is_some()));
    let last = rows.last().unwrap();
    assert_eq!(summary["theta"].as_f64(), Some(last.theta));
    assert_eq!(summary["res_norm"].as_f64(), Some(last.res_norm));
    assert_eq!(summary["model"], "ising");
    assert_eq!(summary["params"]["g"].as_f64(), Some(2.0));
    assert_eq!(summary["rank"], 4);
    assert_eq!(summary["variant"], "fast");
    assert!(summary["theta_hat"].is_f64());
    let schedule = summary["schedule"].as_array().unwrap();
    assert_eq!(schedule.len(), 2);
    assert!(schedule
        .iter()
        .all(|e| e["t"].is_f64() && e["iters"].is_u64() && e["seconds"].is_f64()));
}

#[test]
fn unknown_reference_leaves_err_empty() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s1.csv");
    let json = dir.path().join("s1.json");
    let out = itrpower(&[
        "run",
        "--model",
        "heisenberg-s1",
        "--delta",
        "0.5",
        "--rank",
        "2",
        "--max-iters",
        "30",
        "--check-every",
        "10",
        "--out",
        csv.to_str().unwrap(),
        "--summary",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rows = parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.err.is_none()));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(summary.get("err").is_none());
    assert_eq!(summary["termination"], "max-iters");
}

#[test]
fn identical_flags_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let strip = |text: &str| -> Vec<String> {
        text.lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let (_, a, _) = short_run(dir.path(), "a", &["--seed", "9"]);
    let (_, b, _) = short_run(dir.path(), "b", &["--seed", "9"]);
    let (_, c, _) = short_run(dir.path(), "c", &["--seed", "10"]);
    assert!(a.lines().count() > 1);
    assert_eq!(strip(&a), strip(&b));
    assert_ne!(strip(&a), strip(&c));
}

#[test]
fn verify_passes() {
    let out = itrpower(&["verify"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}

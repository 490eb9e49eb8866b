use std::path::Path;
use std::process::{Command, Output};

fn fogfed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fogfed"))
        .args(args)
        .env("RUST_BACKTRACE", "0")
        .env_remove("FOGFED_PARALLEL")
        .output()
        .expect("spawn fogfed")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small scenario derived from a built-in suite: one load, one method,
/// three repetitions.
fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let shown = fogfed(&["suites", "--show", "alloc_workflows"]);
    assert!(shown.status.success());
    let mut cfg: serde_json::Value = serde_json::from_slice(&shown.stdout).unwrap();
    cfg["name"] = "small".into();
    cfg["repetitions"] = 3.into();
    cfg["sweep"]["requests"] = serde_json::json!([20]);
    cfg["sweep"]["methods"] = serde_json::json!([{ "partition": "propart", "alloc": "mr" }]);
    let path = dir.join("small.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn suite_listing_names_every_suite_and_is_stable() {
    let a = fogfed(&["suites"]);
    let b = fogfed(&["suites"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for name in fogfed::scenario::suites::NAMES {
        assert!(text.contains(name), "{name} missing from listing");
    }
    assert_eq!(text.lines().count(), fogfed::scenario::suites::NAMES.len());
}

#[test]
fn shown_suite_round_trips_through_the_config_parser() {
    for name in fogfed::scenario::suites::NAMES {
        let out = fogfed(&["suites", "--show", name]);
        assert!(out.status.success());
        let parsed = fogfed::ScenarioConfig::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
        assert_eq!(parsed, fogfed::scenario::suites::get(name).unwrap());
    }
}

#[test]
fn simulate_writes_one_row_per_run_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    assert!(fogfed(&["simulate", "--config", cfg, "--out", first.to_str().unwrap(), "--parallel", "1"]).status.success());
    assert!(fogfed(&["simulate", "--config", cfg, "--out", second.to_str().unwrap(), "--parallel", "2"]).status.success());
    let a = std::fs::read_to_string(&first).unwrap();
    assert_eq!(a, std::fs::read_to_string(&second).unwrap());
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "scenario,method,requests,mix,degree,seed,meet_rate,avg_makespan_ms");
    assert!(lines[1..].iter().all(|l| l.starts_with("small,propart+mr,20,")));
}

#[test]
fn trace_flag_writes_plans_and_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("t.csv");
    let run = fogfed(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--trace"]);
    assert!(run.status.success(), "{}", stderr(&run));
    let trace = std::fs::read_to_string(dir.path().join("t.csv.trace.jsonl")).unwrap();
    let mut plans = 0;
    let mut decisions = 0;
    for line in trace.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        plans += usize::from(v.get("plan").is_some());
        decisions += usize::from(v.get("decision").is_some());
    }
    assert_eq!(plans, 3 * 20);
    assert!(decisions >= plans);
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  \"alpha\": ,\n}").unwrap();
    let out = fogfed(&["simulate", "--config", path.to_str().unwrap(), "--out", "/dev/null"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn out_of_range_and_unknown_fields_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let text = std::fs::read_to_string(&cfg).unwrap();
    for (needle, replacement, expect) in [
        ("\"alpha\": 0.5", "\"alpha\": 1.5", "alpha"),
        ("\"alpha\": 0.5", "\"alpah\": 0.5", "alpah"),
    ] {
        assert!(text.contains(needle));
        std::fs::write(&cfg, text.replace(needle, replacement)).unwrap();
        let out = fogfed(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "/dev/null"]);
        assert!(!out.status.success());
        assert!(stderr(&out).contains(expect), "{}", stderr(&out));
    }
}

#[test]
fn zero_repetitions_is_rejected() {
    let out = fogfed(&["simulate", "--config", "alloc_workflows", "--repetitions", "0", "--out", "/dev/null"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--repetitions"));
}

const HEADER: &str = "scenario,method,requests,mix,degree,seed,meet_rate,avg_makespan_ms";

fn report_on(rows: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.csv");
    let mut body = String::from(HEADER);
    for r in rows {
        body.push('\n');
        body.push_str(r);
    }
    body.push('\n');
    std::fs::write(&path, body).unwrap();
    fogfed(&["report", "--in", path.to_str().unwrap()])
}

#[test]
fn report_needs_two_runs_per_cell() {
    let out = report_on(&["s,propart+mr,20,0.0,4,1,0.9,500.0"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("s/propart+mr/20") && err.contains("at least 2"), "{err}");
}

#[test]
fn report_on_identical_runs_has_zero_width_intervals() {
    let out = report_on(&[
        "s,propart+mr,20,0.0,4,1,0.9,500.0",
        "s,propart+mr,20,0.0,4,2,0.9,500.0",
        "s,none+mr,20,0.0,4,1,0.9,500.0",
        "s,none+mr,20,0.0,4,2,0.9,500.0",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.9000 ± 0.0000"), "{text}");
    assert!(text.contains("500.0 ± 0.0"), "{text}");
}

#[test]
fn malformed_csv_names_the_row() {
    let out = report_on(&["s,propart+mr,20,0.0,4,1,0.9,500.0", "s,propart+mr,twenty,0.0,4,2,0.9,500.0"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("row 3"), "{}", stderr(&out));
}

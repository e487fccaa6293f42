use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_approxon"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str], path: &PathBuf) -> Output {
    bin().arg("run").arg(path).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON error")
}

fn rounds(v: &Value) -> f64 {
    let s = v.as_str().unwrap();
    match s.split_once('/') {
        Some((p, q)) => p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap(),
        None => s.parse().unwrap(),
    }
}

#[test]
fn version_prints_the_crate_version() {
    let out = bin().arg("version").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), format!("approxon {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn common_input_gc2k_exits_zero_within_six_rounds() {
    let out = run(&[], &scenario("gc2k_common.json"));
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["aggregate"]["violations"], 0);
    assert_eq!(r["aggregate"]["runs"], 100);
    assert!(rounds(&r["aggregate"]["max_rounds"]) <= 6.0);
}

#[test]
fn path_tree_matrix_stays_within_eighteen_rounds() {
    let out = run(&[], &scenario("tc_path.json"));
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["aggregate"]["runs"], 500);
    assert!(rounds(&r["aggregate"]["max_rounds"]) <= 18.0);
}

#[test]
fn every_example_scenario_passes() {
    for name in ["agr_z_signs.json", "epsilon_quarter.json", "tc_star_path.json", "term_exhaustive.json"] {
        let out = run(&[], &scenario(name));
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn violations_exit_one_and_mark_every_run() {
    let out = run(&[], &golden("violated.json"));
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["aggregate"]["violations"], 20);
    for run in r["runs"].as_array().unwrap() {
        assert_eq!(run["properties"]["rounds"], false);
        assert_eq!(run["properties"]["safety"], true);
        assert!(run["violation"].as_str().unwrap().starts_with("rounds"));
    }
}

#[test]
fn malformed_scenarios_exit_two_naming_the_field() {
    for (file, field) in [("bad_t.json", "t"), ("unknown_field.json", "adversary.colour"), ("bad_input.json", "inputs[2]")] {
        let out = run(&[], &golden(file));
        assert_eq!(out.status.code(), Some(2), "{file}");
        assert!(out.stdout.is_empty());
        assert_eq!(stderr_json(&out)["field"], field, "{file}");
    }
}

#[test]
fn missing_scenario_file_exits_two() {
    let out = run(&[], &golden("absent.json"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["field"], "scenario");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = run(&[], &scenario("agr_z_signs.json"));
    let b = run(&[], &scenario("agr_z_signs.json"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_and_csv_files_match_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let csv = dir.path().join("runs.csv");
    let out = run(
        &["--seeds", "7", "--out", json.to_str().unwrap(), "--csv", csv.to_str().unwrap()],
        &scenario("gc2k_common.json"),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r["aggregate"]["runs"], 7);
    let rows: Vec<String> = std::fs::read_to_string(&csv).unwrap().lines().map(String::from).collect();
    assert_eq!(rows[0], "index,seed,rounds,messages_total,bits_total,passed,safety,liveness,rounds");
    assert_eq!(rows.len(), 8);
    // seeds enumerate from base_seed
    let seeds: Vec<&str> = rows[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(seeds, ["0", "1", "2", "3", "4", "5", "6"]);
}

#[test]
fn traces_appear_only_when_asked() {
    let plain = report(&run(&["--seeds", "2"], &scenario("gc2k_common.json")));
    assert!(plain["runs"][0].get("trace").is_none());
    let traced = report(&run(&["--seeds", "2", "--trace"], &scenario("gc2k_common.json")));
    assert!(!traced["runs"][0]["trace"].as_array().unwrap().is_empty());
}

#[test]
fn event_budget_variable_is_honored() {
    let out = bin()
        .env("APPROXON_EVENT_BUDGET", "10")
        .arg("run")
        .arg(scenario("gc2k_common.json"))
        .args(["--seeds", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["aggregate"]["violations"], 3);
}

#[test]
fn check_rejects_unknown_modules_and_quorums() {
    let out = bin().args(["check", "--filter", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["check", "--mutation", "NoSuchQuorum"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_filter_runs_only_that_module() {
    let out = bin().args(["check", "--filter", "tree-agree"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[..3].iter().all(|l| l.starts_with("PASS") && l.contains("tree-agree")), "{text}");
    assert_eq!(lines[3], "3 of 3 criteria passed");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn injected_threshold_mutation_fails_a_criterion() {
    let out = bin().args(["check", "--filter", "terminate", "--mutation", "term_decide"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.lines().any(|l| l.starts_with("FAIL")), "{text}");
}

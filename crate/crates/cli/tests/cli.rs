use std::process::{Command, Output};

use qh_cli::{parse_records_csv, parse_records_json, parse_reports_csv, parse_reports_json};
use qh_core::rational::int;

fn qh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qh"))
        .args(args)
        .env_remove("QH_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn compute_marked_spot_value() {
    let out = qh(&["compute", "--N", "5", "--d", "1", "--j", "1", "--a", "2", "--b", "-1", "--marked"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["value"], "3850/1");
    assert_eq!(v["query"]["N"], 5);
    assert_eq!(v["query"]["k"], 5);
    assert_eq!(v["query"]["b"], -1);
    assert_eq!(v["query"]["marked"], true);
    assert_eq!(v["compositions"], 1);
    assert_eq!(v["seeds"], serde_json::json!([0]));
    assert_eq!(v["millis"], 0);
}

#[test]
fn selection_rule_violation_is_a_usage_error() {
    let out = qh(&["compute", "--N", "5", "--d", "1", "--j", "1", "--a", "0", "--b", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("selection rule"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(qh(&["compute", "--N", "5"]).status.code(), Some(2));
    assert_eq!(qh(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(qh(&["compute", "--N", "5", "--d", "1", "--j", "2", "--jobs", "0"]).status.code(), Some(2));
}

#[test]
fn forced_query_reports_weight_dependence() {
    let out = qh(&["compute", "--N", "5", "--d", "1", "--j", "1", "--a", "2", "--b", "0", "--force"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &parse_records_json(&stdout(&out)).unwrap()[0];
    assert_eq!(r.seeds, vec![0, 1]);
    assert_eq!(r.weight_dependent, Some(true));
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_qh"))
        .args(["compute", "--N", "5", "--d", "2", "--j", "2", "--a", "0", "--b", "0"])
        .env("QH_SEED", "11")
        .output()
        .unwrap();
    let r = &parse_records_json(&stdout(&out)).unwrap()[0];
    assert_eq!(r.seeds, vec![11]);
}

#[test]
fn verify_hori_passes() {
    let out = qh(&["verify", "--suite", "hori", "--N", "5", "--dmax", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let reports = parse_reports_json(&stdout(&out)).unwrap();
    assert!(!reports.is_empty());
    assert!(reports.iter().all(|r| r.pass));
    assert!(reports.iter().any(|r| r.check_name == "hori"));
}

#[test]
fn verify_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<String> = (0..2)
        .map(|i| dir.path().join(format!("run{i}.jsonl")).display().to_string())
        .collect();
    for p in &paths {
        let out = qh(&["verify", "--suite", "all", "--N", "4", "--dmax", "2", "--output", p]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
}

#[test]
fn sweep_csv_and_json_agree() {
    let base = ["sweep", "--N", "4,5", "--dmax", "2", "--marked"];
    let json = qh(&[&base[..], &["--format", "json"]].concat());
    let csv = qh(&[&base[..], &["--format", "csv"]].concat());
    assert_eq!(json.status.code(), Some(0));
    let from_json = parse_records_json(&stdout(&json)).unwrap();
    let from_csv = parse_records_csv(&stdout(&csv)).unwrap();
    assert!(!from_json.is_empty());
    assert_eq!(from_json, from_csv);
    let mut sorted = from_json.clone();
    sorted.sort_by_key(|r| r.query);
    assert_eq!(sorted, from_json);
    assert!(from_json.iter().all(|r| r.query.marked && r.query.j >= 1));
}

#[test]
fn report_csv_and_json_agree() {
    let base = ["verify", "--suite", "pmain", "--N", "5", "--dmax", "1"];
    let json = parse_reports_json(&stdout(&qh(&[&base[..], &["--format", "json"]].concat()))).unwrap();
    let csv = parse_reports_csv(&stdout(&qh(&[&base[..], &["--format", "csv"]].concat()))).unwrap();
    assert_eq!(json, csv);
    assert_eq!(json.iter().find(|r| r.inputs["j"] == 1).unwrap().rhs, int(770));
}

#[test]
fn calibration_sidecar_feeds_verify() {
    let dir = tempfile::tempdir().unwrap();
    let sidecar = dir.path().join("calibration.json").display().to_string();
    let out = qh(&["calibrate", "--N", "4", "--dmax", "2", "--output", &sidecar]);
    assert_eq!(out.status.code(), Some(0));
    let cal: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert_eq!(cal[1]["selected"]["regime"], "center-dominant");
    assert_eq!(cal[1]["selected"]["numerator"], "closed");
    assert_eq!(cal[1]["selected"]["exponent_offset"], 0);
    let out = qh(&["verify", "--suite", "residue", "--N", "4", "--dmax", "2", "--calibration", &sidecar]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn text_format_summarizes() {
    let out = qh(&["verify", "--suite", "closed-form", "--N", "5", "--dmax", "2", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).ends_with("4 passed, 0 failed\n"));
}

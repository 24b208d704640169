use std::path::Path;
use std::process::{Command, Output};

fn fairuse(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairuse"))
        .args(args)
        .current_dir(dir)
        .env("FAIRUSE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn null_audit_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let o = fairuse(&["synth", "exchangeable-null", "--out", "null.csv", "--n-per-group", "100", "--seed", "3"], dir.path());
    assert_eq!(code(&o), 0);
    let o = fairuse(&["audit", "--data", "null.csv", "--bootstrap", "500", "--seed", "1", "--format", "json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["violation"], false);
    assert_eq!(report["n_train"].as_u64().unwrap() + report["n_test"].as_u64().unwrap(), 400);
}

#[test]
fn misspecification_point_violation_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fairuse(&["synth", "misspecification", "--out", "m.csv"], dir.path())), 0);
    let o = fairuse(
        &["audit", "--data", "m.csv", "--eval-on-train", "--mode", "point", "--bootstrap", "200", "--out", "r.md"],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
    let md = std::fs::read_to_string(dir.path().join("r.md")).unwrap();
    assert!(md.starts_with("# Fair use audit"));
}

#[test]
fn missing_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = fairuse(&["audit", "--data", "absent.csv"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fairuse(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&fairuse(&[], dir.path())), 1);
    assert_eq!(code(&fairuse(&["audit", "--data", "x.csv", "--metric", "f1"], dir.path())), 1);
    assert_eq!(code(&fairuse(&["--help"], dir.path())), 0);
}

#[test]
fn synth_feature_selection_writes_rows_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fairuse(&["synth", "feature-selection", "--out", "fs.csv"], dir.path())), 0);
    let csv = std::fs::read_to_string(dir.path().join("fs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 91);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fs.json")).unwrap()).unwrap();
    assert_eq!(side["rows"], 90);
    assert!(side["expected"]["cells"]["total/h0_errors"].as_i64().unwrap() > 0);
    assert!(side["constraint"].is_object());
}

#[test]
fn synth_shift_writes_truth() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fairuse(&["synth", "label-shift", "--out", "ls.csv"], dir.path())), 0);
    assert!(dir.path().join("ls.truth.csv").exists());
}

#[test]
fn intervene_generic_on_clean_report_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    fairuse(&["synth", "exchangeable-null", "--out", "null.csv", "--n-per-group", "100", "--seed", "3"], dir.path());
    let o = fairuse(
        &["audit", "--data", "null.csv", "--bootstrap", "500", "--seed", "1", "--format", "json", "--out", "r.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let o = fairuse(&["intervene", "--report", "r.json", "--strategy", "generic", "--mode", "significant"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let plan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let sources: Vec<&str> =
        plan["assignments"].as_array().unwrap().iter().map(|a| a["source"].as_str().unwrap()).collect();
    assert_eq!(sources, vec!["personalized"; 4]);
}

#[test]
fn intervene_best3_needs_data() {
    let dir = tempfile::tempdir().unwrap();
    fairuse(&["synth", "planted-violation", "--out", "p.csv", "--n-per-group", "100"], dir.path());
    fairuse(&["audit", "--data", "p.csv", "--bootstrap", "200", "--format", "json", "--out", "r.json"], dir.path());
    assert_eq!(code(&fairuse(&["intervene", "--report", "r.json", "--strategy", "best3"], dir.path())), 1);
    let o = fairuse(&["intervene", "--report", "r.json", "--strategy", "best3", "--data", "p.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let plan: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(plan["assignments"].as_array().unwrap().len(), 4);
}

#[test]
fn replicate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fairuse(&["replicate-paper", "--out", "a"], dir.path())), 0);
    assert_eq!(code(&fairuse(&["replicate-paper", "--out", "b"], dir.path())), 0);
    let a = std::fs::read(dir.path().join("a/bundle.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/bundle.json")).unwrap();
    assert_eq!(a, b);
    let bundle: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(bundle["mismatches"].as_array().unwrap().is_empty());
}

#[test]
fn audit_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fairuse(&["synth", "planted-violation", "--out", "p.csv", "--n-per-group", "80", "--seed", "5"], dir.path());
    let run = || fairuse(&["audit", "--data", "p.csv", "--bootstrap", "300", "--seed", "9", "--format", "json"], dir.path());
    let (a, b) = (run(), run());
    assert_eq!(code(&a), code(&b));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn separate_evaluation_file_keeps_domains() {
    let dir = tempfile::tempdir().unwrap();
    fairuse(&["synth", "exchangeable-null", "--out", "a.csv", "--n-per-group", "60", "--seed", "1"], dir.path());
    fairuse(&["synth", "exchangeable-null", "--out", "b.csv", "--n-per-group", "60", "--seed", "2"], dir.path());
    let o = fairuse(
        &["audit", "--data", "a.csv", "--eval", "b.csv", "--bootstrap", "200", "--format", "json", "--test", "mcnemar"],
        dir.path(),
    );
    assert_ne!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["n_test"], 240);
    assert_eq!(report["overlap_rows"], 0);
}

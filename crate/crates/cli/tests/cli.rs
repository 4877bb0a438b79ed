use std::process::Command;

fn deeptherm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deeptherm"))
}

#[test]
fn run_applies_flags_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment": "ergodicity", "lattice": {"rows": 1, "cols": 3}, "times_ns": [0, 10]}"#).unwrap();
    let out = dir.path().join("out");
    let status = deeptherm()
        .arg("run")
        .arg(&cfg)
        .args(["--mode", "shots", "--seed", "7", "--workers", "2", "--mitigation", "inverse", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let resolved: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["seed"], 7);
    assert_eq!(resolved["mode"], "shots");
    assert!(out.join("manifest.json").exists());
}

#[test]
fn bad_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment": "ergodicity", "times_ns": [5, 1]}"#).unwrap();
    let output = deeptherm().arg("run").arg(&cfg).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("times_ns"));
}

#[test]
fn selftest_reports_selected_criterion() {
    let output = deeptherm().args(["selftest", "--only", "1"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "{stdout}");
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("[PASS]") && stdout.contains("oracle equivalence"), "{stdout}");
}

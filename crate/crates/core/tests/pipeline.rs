use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use deeptherm_core::pipeline::{self, ExperimentConfig, Mode, Overrides, RunOptions};
use deeptherm_core::Execution;

fn config(text: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json_str(text, Path::new("test.json")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(root)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn csv_column(root: &Path, name: &str, column: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(root.join(name)).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == column).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn default_ergodicity_writes_three_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"experiment": "ergodicity"}"#, dir.path());
    let report = pipeline::run(cfg, None, RunOptions::default()).unwrap();
    let out = files(dir.path());
    let histograms: Vec<&String> = out.keys().filter(|k| k.starts_with("histogram_t")).collect();
    assert_eq!(histograms, ["histogram_t2.csv", "histogram_t306.csv", "histogram_t50.csv"]);
    for name in ["densities.csv", "porter_thomas_ks.csv", "summary.json", "manifest.json", "resolved_config.json"] {
        assert!(out.contains_key(name), "{name} missing");
    }
    assert_eq!(report.files.len() + 1, out.len());
    // Néel pattern still visible at 2 ns: even sites excited
    let t = csv_column(dir.path(), "densities.csv", "t_ns");
    let n: Vec<f64> = csv_column(dir.path(), "densities.csv", "n_j").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(t[0], "2");
    for (j, v) in n[..4].iter().enumerate() {
        assert!((v - if j % 2 == 0 { 1.0 } else { 0.0 }).abs() < 0.01, "site {j}: {v}");
    }
}

#[test]
fn smoke_1x2_runs_fast() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    for (i, text) in [
        r#"{"experiment": "ergodicity", "lattice": {"rows": 1, "cols": 2}}"#,
        r#"{"experiment": "deep_thermalization", "lattice": {"rows": 1, "cols": 2}, "initial_pattern": "01", "subsystem_a": [0]}"#,
    ]
    .iter()
    .enumerate()
    {
        pipeline::run(config(text, &dir.path().join(i.to_string())), None, RunOptions::default()).unwrap();
    }
    assert!(start.elapsed().as_secs_f64() < 1.0, "{:?}", start.elapsed());
}

#[test]
fn neel_start_is_half_from_haar() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"experiment": "deep_thermalization", "lattice": {"rows": 2, "cols": 4}, "times_ns": [0, 40]}"#;
    pipeline::run(config(text, dir.path()), None, RunOptions::default()).unwrap();
    let t = csv_column(dir.path(), "moments.csv", "t_ns");
    let k = csv_column(dir.path(), "moments.csv", "k");
    let delta = csv_column(dir.path(), "moments.csv", "delta_k");
    let row = t.iter().zip(&k).position(|(t, k)| t == "0" && k == "1").unwrap();
    assert!((delta[row].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    for name in ["moment_k2.json", "moment_k3.json", "bloch_t40.csv", "ensemble_t40.json"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn zero_noise_leakage_stays_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"experiment": "leakage", "lattice": {"rows": 3, "cols": 3}, "times_ns": [0, 20, 40, 60],
        "noise": [{"kind": "white", "strength": 0}, {"kind": "one_over_f", "strength": 0}], "trajectories": 3}"#;
    pipeline::run(config(text, dir.path()), None, RunOptions::default()).unwrap();
    for name in ["entropy_white.csv", "entropy_one_over_f.csv"] {
        for v in csv_column(dir.path(), name, "avg_entropy") {
            assert!(v.parse::<f64>().unwrap().abs() <= 1e-9, "{name}: {v}");
        }
    }
}

#[test]
fn same_seed_gives_identical_bytes_and_seed_matters() {
    let text = r#"{"experiment": "ergodicity", "lattice": {"rows": 2, "cols": 3}, "times_ns": [0, 30, 60],
        "mode": "noisy", "noise": [{"kind": "white", "strength": 5e6}], "trajectories": 6}"#;
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: u64, exec: Execution, workers: Option<usize>| {
        let root = dir.path().join(format!("s{seed}-{exec:?}-{workers:?}"));
        let mut cfg = config(text, &root);
        cfg.seed = seed;
        pipeline::run(cfg, Some(text.as_bytes()), RunOptions { exec, workers }).unwrap();
        let mut f = files(&root);
        // Differs only through the output path recorded in the config.
        f.remove("resolved_config.json");
        f.remove("manifest.json");
        f
    };
    let a = run(1, Execution::Serial, None);
    assert_eq!(a, run(1, Execution::Parallel, Some(3)));
    assert_ne!(a["densities.csv"], run(2, Execution::Serial, None)["densities.csv"]);
}

#[test]
fn resolved_config_reruns_to_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"experiment": "deep_thermalization", "lattice": {"rows": 2, "cols": 3}, "times_ns": [0, 25, 50],
        "mode": "shots", "shots_per_basis": 3000, "selection_threshold": 10}"#;
    pipeline::run(config(text, dir.path()), Some(text.as_bytes()), RunOptions::default()).unwrap();
    let first = files(dir.path());
    let resolved = dir.path().join("resolved_config.json");
    let again = tempfile::tempdir().unwrap();
    let copy = again.path().join("cfg.json");
    std::fs::copy(&resolved, &copy).unwrap();
    pipeline::run_file(&copy, &Overrides::default(), RunOptions::default()).unwrap();
    let second = files(dir.path());
    for (name, bytes) in &first {
        if name != "manifest.json" {
            assert_eq!(bytes, &second[name], "{name} changed");
        }
    }
}

#[test]
fn overrides_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.json");
    std::fs::write(&cfg_path, r#"{"experiment": "ergodicity", "lattice": {"rows": 1, "cols": 3}, "times_ns": [0, 10]}"#)
        .unwrap();
    let out = dir.path().join("elsewhere");
    let overrides = Overrides { mode: Some(Mode::Shots), seed: Some(99), out: Some(out.clone()), mitigation: None };
    let report = pipeline::run_file(&cfg_path, &overrides, RunOptions::default()).unwrap();
    assert_eq!(report.output_dir, out);
    let resolved: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["mode"], "shots");
    assert_eq!(resolved["seed"], 99);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let input_hash = pipeline::content_hash(&std::fs::read(&cfg_path).unwrap());
    assert_eq!(manifest["input_hash"], input_hash);
    assert_eq!(manifest["schema_version"], pipeline::SCHEMA_VERSION);
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"experiment": "ergodicity", "times_ns": [0, 5, 5]}"#, "times_ns"),
        (r#"{"experiment": "ergodicity", "subsystem_a": [3, 3]}"#, "subsystem_a"),
        (r#"{"experiment": "ergodicity", "mode": "noisy", "trajectories": 0, "noise": [{"kind": "white", "strength": 1}]}"#, "trajectories"),
        (r#"{"experiment": "leakage", "noise": [{"kind": "white"}]}"#, "noise[0]"),
    ];
    for (text, field) in cases {
        let err = pipeline::run(config(text, dir.path()), None, RunOptions::default()).unwrap_err().to_string();
        assert!(err.contains(field), "{text}: {err}");
    }
    let err = ExperimentConfig::from_json_str(r#"{"experiment": "ergodicity", "tmies_ns": [1]}"#, Path::new("x.json"))
        .unwrap_err()
        .to_string();
    assert!(err.contains("tmies_ns") && err.contains("line 1"), "{err}");
}

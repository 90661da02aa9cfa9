//! Command-line behaviour: outputs, exit codes and reproducibility records.

use std::path::Path;
use std::process::{Command, Output};

fn nnodh(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nnodh"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn make_scenario_writes_a_loadable_scenario_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = nnodh(dir.path(), &["make-scenario", "--penetration", "0.6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = nnodh::mds::read_scenario(&dir.path().join("scenario.json")).unwrap();
    assert!((nnodh::scenario::penetration(&config) - 0.6).abs() < 1e-9);
    let manifest = read_json(&dir.path().join("manifest_make-scenario.json"));
    assert_eq!(manifest["manifest"]["seed"], 7);
    assert_eq!(manifest["manifest"]["command"], "make-scenario");
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs, ["scenario_profiles.csv", "scenario.json"]);
}

#[test]
fn help_and_version_exit_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    for flag in ["--help", "--version"] {
        assert_eq!(nnodh(dir.path(), &[flag]).status.code(), Some(0));
    }
    let help = nnodh(dir.path(), &["--help"]);
    let text = String::from_utf8_lossy(&help.stdout);
    for cmd in ["simulate-aging", "prep", "train", "schedule", "sweep", "make-scenario", "report"] {
        assert!(text.contains(cmd), "help lacks {cmd}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nnodh(dir.path(), &["schedule", "--pipeline", "nonsense"]).status.code(), Some(1));
    assert_eq!(nnodh(dir.path(), &["make-scenario", "--penetration=-0.5"]).status.code(), Some(1));
    // missing model file
    assert_eq!(nnodh(dir.path(), &["schedule", "--pipeline", "mds"]).status.code(), Some(1));
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.contains(".partial"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn infeasible_scenarios_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = nnodh::scenario::bundled();
    config.tie_max = 1.0;
    config.generators.clear();
    nnodh::mds::write_scenario(dir.path(), "tight", &config).unwrap();
    let model = nnodh::nnbd::init_network(&Default::default(), 1).unwrap();
    let trained = nnodh::nnbd::DegradationModel {
        fingerprint: Some(nnodh::nnbd::Fingerprint {
            seed: 1,
            epochs: 0,
            best_epoch: 0,
            final_train_mse: 0.0,
            final_val_mse: 0.0,
        }),
        ..model
    };
    let model_path = dir.path().join("m.json");
    nnodh::nnbd::save_model(&model_path, &trained).unwrap();
    let scenario = dir.path().join("tight.json");
    let out = Command::new(env!("CARGO_BIN_EXE_nnodh"))
        .arg("--out")
        .arg(dir.path())
        .arg("--config")
        .arg(&scenario)
        .args(["schedule", "--pipeline", "mds", "--model"])
        .arg(&model_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("schedule_mds.csv").exists());
}

#[test]
fn sweep_records_failed_points_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let model = nnodh::nnbd::init_network(&Default::default(), 3).unwrap();
    let trained = nnodh::nnbd::DegradationModel {
        fingerprint: Some(nnodh::nnbd::Fingerprint {
            seed: 3,
            epochs: 0,
            best_epoch: 0,
            final_train_mse: 0.0,
            final_val_mse: 0.0,
        }),
        ..model
    };
    nnodh::nnbd::save_model(&dir.path().join("model_regressed.json"), &trained).unwrap();
    // an infeasibly small battery price is rejected point by point
    let out = nnodh(dir.path(), &["sweep", "--kind", "size-price", "--sizes", "200", "--prices=-5,300", "--alpha", "0.3", "--max-iterations", "11"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("sweep_size-price.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert!(!headers.iter().any(|h| h == "wall_time_s"));
    let status = headers.iter().position(|h| h == "status").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][status], "failed");
    assert_eq!(&rows[1][status], "ok");
}

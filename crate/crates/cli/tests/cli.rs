use std::path::{Path, PathBuf};
use std::process::Command;

use approx::assert_relative_eq;
use ehpc_cli::{run_offline, ExperimentConfig, OutputDir, SCHEMA_VERSION};
use ehpc_core::offline::total_distortion;
use ehpc_core::{PowerSchedule, SystemParams};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ehpc-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn ehpc(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ehpc"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("EHPC_THREADS")
        .output()
        .unwrap()
}

#[test]
fn single_slot_spends_both_arrivals() {
    let cfg = ExperimentConfig::from_json(r#"{ "traces": { "e1": [2.0], "e2": [3.0] } }"#).unwrap();
    let dir = scratch("toy");
    let mut out = OutputDir::create(&dir).unwrap();
    let r = run_offline(&cfg, &mut out).unwrap();
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    assert_eq!(r.schedule.len(), 1);
    assert_relative_eq!(r.schedule[0].p1, 2.0, max_relative = 1e-9);
    assert_relative_eq!(r.schedule[0].p2, 3.0, max_relative = 1e-9);
    let expect = total_distortion(
        &PowerSchedule::new(vec![2.0]).unwrap(),
        &PowerSchedule::new(vec![3.0]).unwrap(),
        &SystemParams::paper_defaults(),
    );
    assert_relative_eq!(r.objective, expect, max_relative = 1e-12);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn unknown_config_keys_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{ "sed": 3 }"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{ "solver": { "vi_epsilon": 1e-3 } }"#).is_err());
}

#[test]
fn offline_without_traces_is_a_config_error() {
    let dir = scratch("notraces");
    let o = ehpc(&["offline"], &dir.join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bad_config_file_is_a_config_error() {
    let dir = scratch("badcfg");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let o = ehpc(&["--config", cfg.to_str().unwrap(), "online"], &dir.join("out"));
    assert_eq!(o.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let dir = scratch("threads");
    let o = Command::new(env!("CARGO_BIN_EXE_ehpc"))
        .args(["--paper-defaults", "offline", "--out"])
        .arg(dir.join("out"))
        .env("EHPC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn offline_run_writes_versioned_outputs() {
    let dir = scratch("offline");
    let out = dir.join("out");
    let o = ehpc(&["--paper-defaults", "offline", "--oracle", "descent"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "offline");
    assert_eq!(manifest["schema_version"], SCHEMA_VERSION);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("offline_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], SCHEMA_VERSION);

    let mut rdr = csv::Reader::from_path(out.join("offline_schedule.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..5], ["slot", "e1", "e2", "p1", "p2"]);
    assert_eq!(rdr.records().count(), 10);
    std::fs::remove_dir_all(dir).unwrap();
}

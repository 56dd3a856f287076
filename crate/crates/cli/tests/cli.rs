use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tmqi(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmqi"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn listed(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = manifest(dir)["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["name"].as_str().unwrap().to_string())
        .collect();
    names.sort();
    names
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    for flag in ["--help", "--version"] {
        let out = tmqi(&[flag], dir.path());
        assert!(out.status.success(), "{flag}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[qkd]\nd = 3\nbogus = 1\n").unwrap();
    let out = tmqi(&["qkd", "--config", cfg.to_str().unwrap()], &dir.path().join("run"));
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn bad_flag_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmqi(&["qkd", "--eve", "wiretap"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn unsupported_dimension_is_a_model_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmqi(&["qkd", "--d", "7", "--rounds", "10"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "model");
}

#[test]
fn manifest_lists_every_output() {
    let root = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 8] = [
        &["modes"],
        &["decompose", "--n-points", "64"],
        &["qpg"],
        &["gates", "--random", "2"],
        &["tomo"],
        &["qkd", "--rounds", "2000", "--log"],
        &["fuse"],
        &["cluster", "--trials", "20"],
    ];
    for args in runs {
        let dir = root.path().join(args[0]);
        let out = tmqi(args, &dir);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let m = manifest(&dir);
        assert_eq!(m["command"], args[0]);
        assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
        let mut on_disk: Vec<String> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n != "manifest.json")
            .collect();
        on_disk.sort();
        assert_eq!(listed(&dir), on_disk, "{args:?}");
        for o in m["outputs"].as_array().unwrap() {
            let bytes = fs::metadata(dir.join(o["name"].as_str().unwrap())).unwrap().len();
            assert_eq!(o["bytes"].as_u64(), Some(bytes));
        }
    }
}

#[test]
fn repeat_runs_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    for dir in [&a, &b] {
        assert!(tmqi(&["qkd", "--d", "3", "--rounds", "3000", "--eve", "intercept-resend", "--seed", "11", "--log"], dir)
            .status
            .success());
    }
    for name in listed(&a) {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name}");
    }
    assert_eq!(manifest(&a)["config_sha256"], manifest(&b)["config_sha256"]);
}

#[test]
fn seed_changes_sampled_outputs() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    assert!(tmqi(&["qkd", "--rounds", "2000", "--seed", "1"], &a).status.success());
    assert!(tmqi(&["qkd", "--rounds", "2000", "--seed", "2"], &b).status.success());
    assert_ne!(fs::read(a.join("qkd.json")).unwrap(), fs::read(b.join("qkd.json")).unwrap());
}

#[test]
fn csv_format_switches_tables() {
    let root = tempfile::tempdir().unwrap();
    let (j, c) = (root.path().join("json"), root.path().join("csv"));
    assert!(tmqi(&["cluster", "--trials", "10"], &j).status.success());
    assert!(tmqi(&["cluster", "--trials", "10", "--format", "csv"], &c).status.success());
    assert!(listed(&j).contains(&"trials.json".to_string()));
    assert!(listed(&c).contains(&"trials.csv".to_string()));
    let csv = fs::read_to_string(c.join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn config_file_values_are_used_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 5\n[qkd]\nd = 3\nrounds = 1000\n").unwrap();
    let out_dir = dir.path().join("run");
    let out = tmqi(&["qkd", "--config", cfg.to_str().unwrap(), "--rounds", "500"], &out_dir);
    assert!(out.status.success());
    let m = manifest(&out_dir);
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["d"], 3);
    assert_eq!(m["config"]["rounds"], 500);
}

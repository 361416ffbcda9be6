use std::process::Command;

fn hybridem() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hybridem"));
    c.env_remove("HYBRIDEM_OUT");
    c
}

#[test]
fn mesh_info_prints_cell_count() {
    let out = hybridem().args(["mesh-info", "--N", "16"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "cells: 512"), "{text}");
}

#[test]
fn unknown_config_key_exits_with_category() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[mesh]\nn = 4\ncolour = 1\n").unwrap();
    let out = hybridem().args(["time", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error[config]") && err.contains("colour"), "{err}");
}

#[test]
fn time_run_writes_to_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let text = "kind = \"time\"\n[mesh]\nn = 2\n[time]\nsteps = 3\n";
    std::fs::write(&cfg, text).unwrap();
    let out_dir = dir.path().join("out");
    let out = hybridem()
        .args(["time", "--dt", "0.05", "--config"])
        .arg(&cfg)
        .env("HYBRIDEM_OUT", &out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(out_dir.join("config.toml")).unwrap(), text);
    let csv = std::fs::read_to_string(out_dir.join("time_series.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let meta = std::fs::read_to_string(out_dir.join("metadata.toml")).unwrap();
    assert!(meta.contains("nonconforming = \"false\""), "{meta}");
}

#[test]
fn out_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let flag_dir = dir.path().join("flag");
    let out = hybridem()
        .args(["eigen", "--N", "2", "--out"])
        .arg(&flag_dir)
        .env("HYBRIDEM_OUT", dir.path().join("env"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(flag_dir.join("errors.csv").exists());
    assert!(!dir.path().join("env").exists());
}

#[test]
fn invalid_degree_is_rejected() {
    let out = hybridem().args(["eigen", "--r", "9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("mesh.r"));
}

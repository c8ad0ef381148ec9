use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ltev2x::RunConfig;

fn ltev2x(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltev2x"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LTEV2X_OUT")
        .output()
        .unwrap()
}

fn write_small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, "[run]\nhorizon_s = 0.3\nwarmup_s = 0.1\n").unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn default_config_prints_and_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = ltev2x(&["--print-default-config"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunConfig::parse_str(&text).unwrap(), RunConfig::default());
}

#[test]
fn run_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = ltev2x(
        &["run", "--config", &cfg, "--seed", "3", "--out", "res"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["records.csv", "summary.json", "cdf.csv"] {
        assert!(dir.path().join("res").join(f).is_file(), "{f} missing");
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed 3"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_ltev2x"))
        .args(["run", "--config", &cfg])
        .current_dir(dir.path())
        .env("LTEV2X_OUT", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from-env/records.csv").is_file());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[scenario]\ndensity_per_km2 = -1.0\n").unwrap();
    let out = ltev2x(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("E_CONFIG_RANGE"));

    fs::write(&bad, "[scenario]\nno_such_key = 1\n").unwrap();
    let out = ltev2x(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("E_CONFIG_UNKNOWN_KEY"));

    let out = ltev2x(&["run", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = ltev2x(&["sweep", "--axis", "power=1,2"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = ltev2x(&["sweep", "--modes", "broadcast"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_reports_every_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = ltev2x(
        &[
            "sweep",
            "--config",
            &cfg,
            "--axis",
            "bandwidth=10,20",
            "--modes",
            "unicast,multicast",
            "--seeds",
            "1..2",
            "--out",
            "sw",
            "--jobs",
            "2",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 8);
    assert!(dir.path().join("sw/sweep_summary.csv").is_file());
    assert!(dir
        .path()
        .join("sw/bandwidth-20_multicast/seed-2/summary.json")
        .is_file());
}

#[test]
fn scenario_dump_is_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = ltev2x(&["run", "--dump-scenario", "--seed", "4"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,kind,x,y,sector"));
    assert_eq!(lines.count(), 295);
    assert!(!dir.path().join("out").exists());
}

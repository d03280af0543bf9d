use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wrw-smooth"));
    cmd.env_remove("WRW_SMOOTH_LOG");
    cmd
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_scenario(dir: &Path, name: &str, edit: impl Fn(String) -> String) -> PathBuf {
    let text = fs::read_to_string(scenario("linear_oracle.toml")).unwrap();
    let path = dir.join(name);
    fs::write(&path, edit(text)).unwrap();
    path
}

#[test]
fn validate_accepts_every_checked_in_scenario() {
    for entry in fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().args(["validate", "--scenario"]).arg(&path).output().unwrap();
        assert_eq!(
            code(&out),
            0,
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stdout).contains(": ok"));
    }
}

#[test]
fn run_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--runs", "3", "--workers", "2", "--oracle", "--scenario"])
        .arg(scenario("linear_oracle.toml"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("oracle max |diff|"), "{stdout}");
    for file in ["summary.json", "rmse_cks.csv", "trajectory_run0_cks.csv"] {
        assert!(out_dir.join(file).is_file(), "missing {file}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs_requested"], 3);
}

#[test]
fn algorithm_and_seed_flags_override_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args([
            "run",
            "--runs",
            "2",
            "--seed",
            "99",
            "--algo",
            "acks",
            "--algo",
            "WRWACRTS",
            "--scenario",
        ])
        .arg(scenario("linear_oracle.toml"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"]["base_seed"], 99);
    let algos: Vec<&str> = summary["results"]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    assert_eq!(algos, ["acks", "wrwacrts"]);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_value = write_scenario(dir.path(), "bad.toml", |t| t.replace("runs = 10", "runs = 0"));
    let unknown_key = write_scenario(dir.path(), "typo.toml", |t| t.replace("base_seed", "base_sed"));
    let cases: Vec<Vec<std::ffi::OsString>> = vec![
        vec!["validate".into(), "--scenario".into(), bad_value.into()],
        vec!["validate".into(), "--scenario".into(), unknown_key.into()],
        vec![
            "validate".into(),
            "--scenario".into(),
            dir.path().join("missing.toml").into(),
        ],
        vec![
            "run".into(),
            "--scenario".into(),
            scenario("linear_oracle.toml").into(),
            "--algo".into(),
            "ukf".into(),
        ],
        vec![
            "run".into(),
            "--scenario".into(),
            scenario("linear_oracle.toml").into(),
            "--runs".into(),
            "0".into(),
        ],
        vec![
            "run".into(),
            "--scenario".into(),
            scenario("matched.toml").into(),
            "--oracle".into(),
        ],
        vec!["frobnicate".into()],
    ];
    for args in cases {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // every trajectory sits on the sensor, where the bearing is undefined
    let path = dir.path().join("origin.toml");
    let text = fs::read_to_string(scenario("matched.toml"))
        .unwrap()
        .replace("x0 = [100.0, 100.0, 50.0, 50.0]", "x0 = [0.0, 0.0, 0.0, 0.0]")
        .replacen("q = [0.2, 0.2, 0.2, 0.2]", "q = [0.0, 0.0, 0.0, 0.0]", 1)
        .replace("g = 9.8", "g = 0.0");
    fs::write(&path, text).unwrap();
    let out = bin()
        .args(["run", "--runs", "4", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));

    // a filter started at the origin puts the x2 and x4 cubature points on the sensor
    let path = dir.path().join("zero_init.toml");
    let text = fs::read_to_string(scenario("matched.toml"))
        .unwrap()
        .replace("init = \"sampled\"", "init = \"fixed\"\nx0 = [0.0, 0.0, 0.0, 0.0]");
    fs::write(&path, text).unwrap();
    let out = bin()
        .args(["run", "--runs", "4", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out2"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn log_level_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("WRW_SMOOTH_LOG", "info")
        .args(["run", "--runs", "1", "--scenario"])
        .arg(scenario("linear_oracle.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("INFO"));
}

#[test]
fn help_and_version_succeed() {
    for flag in ["--help", "--version"] {
        let out = bin().arg(flag).output().unwrap();
        assert_eq!(code(&out), 0);
    }
}

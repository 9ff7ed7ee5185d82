use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/configs")
}

fn device() -> PathBuf {
    configs().join("reference_device.json")
}

fn scenario(name: &str) -> PathBuf {
    configs().join("scenarios").join(format!("{name}.json"))
}

fn cli(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phonon-router")).args(args.iter().map(|a| a.as_ref())).output().unwrap()
}

fn run(name: &str, out: &Path, extra: &[&str]) -> Output {
    let (d, s) = (device(), scenario(name));
    let mut args: Vec<&dyn AsRef<std::ffi::OsStr>> = vec![&"run", &"--config", &d, &"--scenario", &s, &"--out", &out];
    for e in extra {
        args.push(e);
    }
    cli(&args)
}

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("power-sweep", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("power_sweep.csv").is_file());
    assert!(dir.path().join("manifest.json").is_file());
    assert!(String::from_utf8_lossy(&out.stdout).contains("manifest.json"));
}

#[test]
fn validate_prints_derived_constants() {
    let d = device();
    let out = cli(&[&"validate", &"--config", &d]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ok"), "{text}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("fit", &a, &["--seed", "3"]).status.success());
    assert!(run("fit", &b, &["--seed", "3", "--sequential"]).status.success());
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "manifest.json" {
            continue;
        }
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let bad_name = dir.path().join("bad.json");
    fs::write(&bad_name, r#"{"name": "no-such-scenario"}"#).unwrap();
    let d = device();
    let out = cli(&[&"run", &"--config", &d, &"--scenario", &bad_name, &"--out", &dir.path()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let bad_cfg = dir.path().join("device.json");
    let text = fs::read_to_string(device()).unwrap().replacen('{', r#"{"unexpected": 1,"#, 1);
    fs::write(&bad_cfg, text).unwrap();
    assert_eq!(cli(&[&"validate", &"--config", &bad_cfg]).status.code(), Some(1));

    let missing = dir.path().join("missing.json");
    assert_eq!(cli(&[&"validate", &"--config", &missing]).status.code(), Some(3));
    let s = scenario("power-sweep");
    let out = cli(&[&"run", &"--config", &missing, &"--scenario", &s, &"--out", &dir.path()]);
    assert_eq!(out.status.code(), Some(3));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bdris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdris")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const POWER: &str = "experiment = \"power-comparison\"\ntrials = 4\nelement_counts = [4, 8]\n";

#[test]
fn run_writes_outputs_and_reports_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "power.toml", POWER);
    let out = tmp.path().join("out");
    let o = bdris(&["run", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("check bd-ris-dominates-n8 pass")), "{stdout}");
    for f in ["results.csv", "schema.txt", "summary.csv", "checks.csv", "plotspec.csv", "config.resolved", "manifest.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn misspelled_key_is_a_config_fault_naming_key_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "typo.toml", "experiment = \"power-comparison\"\ntrails = 3\n");
    let o = bdris(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("trails") && err.contains(":2:1:"), "{err}");
}

#[test]
fn empty_config_reports_missing_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "empty.toml", "");
    for sub in ["run", "validate"] {
        let o = bdris(&[sub, "--config", &cfg]);
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).trim_end().ends_with("experiment missing"), "{}", stderr(&o));
    }
}

#[test]
fn validate_prints_the_resolved_config_verbatim() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "v.toml", &format!("{POWER}[channel.path_loss]\nexponent_device_ris = 2.2\n"));
    let o = bdris(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("exponent_device_ris = 2.2\n"));
    assert!(text.contains("trials = 4\n"));
    let again = write(tmp.path(), "again.toml", &text);
    let o2 = bdris(&["validate", "--config", &again]);
    assert_eq!(String::from_utf8(o2.stdout).unwrap(), text);
}

#[test]
fn reruns_without_timing_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "b.toml", "experiment = \"beamforming-bench\"\ntrials = 2\nelement_counts = [4]\n");
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for (dir, threads) in dirs.iter().zip(["1", "2"]) {
        let o = bdris(&["run", "--config", &cfg, "--out-dir", dir.to_str().unwrap(), "--no-timing", "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["results.csv", "summary.csv", "checks.csv", "plotspec.csv"] {
        assert_eq!(fs::read(dirs[0].join(f)).unwrap(), fs::read(dirs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn strict_non_convergence_exits_with_runtime_status() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        "experiment = \"beamforming-bench\"\ntrials = 1\nelement_counts = [4]\nalgorithms = [\"qnm\"]\n[optimizer]\nmax_iterations = 1\n",
    );
    let out = tmp.path().join("out");
    let o = bdris(&["run", "--config", &cfg, "--out-dir", out.to_str().unwrap(), "--strict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[runtime]"));
}

#[test]
fn out_of_range_seed_and_bad_flags_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "p.toml", POWER);
    let o = bdris(&["run", "--config", &cfg, "--seed", "9223372036854775808"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).lines().count(), 1);
    assert_eq!(bdris(&["run", "--config", &cfg, "--threads", "0"]).status.code(), Some(1));
    assert_eq!(bdris(&["run"]).status.code(), Some(1));
    assert_eq!(bdris(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bdris(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_config_file_is_a_config_fault() {
    let o = bdris(&["validate", "--config", "/nonexistent/cfg.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[config] /nonexistent/cfg.toml"));
}

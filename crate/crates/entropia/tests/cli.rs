//! End-to-end checks of the `entropia` binary: exit codes, artifacts, and
//! byte-level determinism of repeated runs.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entropia"))
}

fn quick_entropy_args(out: &Path) -> Vec<String> {
    vec![
        "entropy".into(),
        "--system".into(),
        "doubling".into(),
        "--eps".into(),
        "0.0625,0.03125".into(),
        "--grid-g".into(),
        "11".into(),
        "--window".into(),
        "4,9".into(),
        "--out".into(),
        out.display().to_string(),
    ]
}

#[test]
fn entropy_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = bin().args(quick_entropy_args(&out)).status().unwrap();
    assert!(status.success());
    for name in ["entropy_counts.csv", "entropy_rates.csv", "config.txt", "verdicts.txt", "plot.txt"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let verdicts = std::fs::read_to_string(out.join("verdicts.txt")).unwrap();
    assert!(verdicts.contains("PASS sandwich"), "{verdicts}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(bin().args(quick_entropy_args(&a)).status().unwrap().success());
    assert!(bin().args(quick_entropy_args(&b)).status().unwrap().success());
    for name in ["entropy_counts.csv", "entropy_rates.csv"] {
        let pa = std::fs::read(a.join(name)).unwrap();
        let pb = std::fs::read(b.join(name)).unwrap();
        assert_eq!(pa, pb, "{name} differs between runs");
    }
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "[experiment]\ntask = entropy\nsystem = doubling\neps = 0.125, 0.0625\ngrid_g = 10\nwindow = 3, 8\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let output = bin()
        .arg("entropy")
        .arg("--config")
        .arg(&cfg)
        .arg("--system")
        .arg("identity")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let snapshot = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(snapshot.contains("system = identity"), "{snapshot}");
    assert!(snapshot.contains("grid_g = 10"), "{snapshot}");
}

#[test]
fn bad_inputs_exit_with_code_two() {
    let unknown_task = bin().arg("no-such-task").output().unwrap();
    assert_eq!(unknown_task.status.code(), Some(2));
    let unknown_system = bin()
        .args(["entropy", "--system", "hyperion"])
        .output()
        .unwrap();
    assert_eq!(unknown_system.status.code(), Some(2));
    let rising_ladder = bin()
        .args(["entropy", "--eps", "0.1,0.2"])
        .output()
        .unwrap();
    assert_eq!(rising_ladder.status.code(), Some(2));
}

#[test]
fn schedule_report_prints_verdict() {
    let output = bin()
        .args(["schedule-report", "--system", "doubling"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("PASS schedule-health"), "{stdout}");
}

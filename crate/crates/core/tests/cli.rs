//! End-to-end runs of the command-line tool.

use std::fs;
use std::process::Command;

use irs_noma::channel;
use irs_noma::sim;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irs-noma"))
}

#[test]
fn run_writes_result_table() {
    let dir = tempfile::tempdir().unwrap();
    let exp = dir.path().join("exp.toml");
    fs::write(
        &exp,
        "trials = 2\nseed = 3\nsolvers = [\"ZF\"]\n[system]\nelements = 6\n[sweep]\naxis = \"M\"\nvalues = [4, 6]\n",
    )
    .unwrap();
    let out = dir.path().join("res.csv");
    let status = bin()
        .args(["run", exp.to_str().unwrap(), "--solver", "ZF", "--solver", "ZF-noIRS", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let table = sim::read_csv(&out).unwrap();
    assert_eq!(table.rows.len(), 4);
    assert!(table.rows.iter().all(|r| r.feasibility_rate == 1.0));
}

#[test]
fn fully_failed_cell_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let exp = dir.path().join("exp.toml");
    // zero forcing needs N >= 2K - 1 = 5
    fs::write(&exp, "trials = 1\nsolvers = [\"ZF\"]\n[sweep]\naxis = \"N\"\nvalues = [4, 6]\n").unwrap();
    let output = bin().args(["run", exp.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("4,ZF,,,0.00000000e0"));
}

#[test]
fn bad_experiment_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let exp = dir.path().join("exp.toml");
    fs::write(&exp, "[sweep]\naxis = \"M\"\nvalues = []\n").unwrap();
    let output = bin().args(["run", exp.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let missing = bin().args(["run", "/no/such/file.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/file.toml"));
}

#[test]
fn trace_and_channels() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let output = bin()
        .args(["trace", "--solver", "ZF", "--case", "III", "--levels", "4", "--seed", "1", "--out", trace.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with(&sim::TRACE_HEADER.join(",")));
    assert!(dir.path().join("trace.feasibility.csv").exists());

    let ch = dir.path().join("ch.txt");
    assert!(bin()
        .args(["channels", "--seed", "5", "--out", ch.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let back = channel::read_text(&ch).unwrap();
    let cfg = irs_noma::model::SystemConfig::standard();
    assert_eq!(back, channel::generate(&cfg, 5).unwrap());
}

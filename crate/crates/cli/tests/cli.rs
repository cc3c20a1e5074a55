//! End-to-end tests of the `pwp` binary: output formats, exit codes, and
//! run-to-run determinism, exercised through real process invocations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pwp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::write(&path, contents).expect("temp file is writable");
    path
}

fn corpus_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus/grover.pwp")
}

#[test]
fn wp_run_computes_the_coin_expectation() {
    let file = temp_file("coin.pwp", "x := 1 @ 1/2, 0 @ 1/2\n");
    let out = pwp(&["wp", "run", file.to_str().unwrap(), "--post", "x"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0.5\n");
}

#[test]
fn wp_run_binds_free_variables_in_order() {
    let out = pwp(&[
        "wp",
        "run",
        corpus_path().to_str().unwrap(),
        "--post",
        "S = classical(x0, N)",
        "--bind",
        "N=4",
        "--bind",
        "C=1",
        "--bind",
        "x0=2",
        "--bind",
        "f=(lam i | 0 <= i < N . i = x0)",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out), "1\n");
}

#[test]
fn wp_run_reports_unbound_names_as_usage_errors() {
    let file = temp_file("unbound.pwp", "x := y + 1\n");
    let out = pwp(&["wp", "run", file.to_str().unwrap(), "--post", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("y"), "stderr: {}", stderr(&out));
}

#[test]
fn malformed_programs_fail_with_position_information() {
    let file = temp_file("malformed.pwp", "x :=\n  @@\n");
    let out = pwp(&["wp", "run", file.to_str().unwrap(), "--post", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 2"), "stderr: {err}");
    assert!(err.contains("column 3"), "stderr: {err}");
}

#[test]
fn missing_files_and_bad_flags_exit_two() {
    let out = pwp(&["wp", "run", "/nonexistent.pwp", "--post", "x"]);
    assert_eq!(out.status.code(), Some(2));

    let out = pwp(&["grover", "prob", "--wat"]);
    assert_eq!(out.status.code(), Some(2));

    let out = pwp(&["grover", "prob", "--n", "0", "--c", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = pwp(&[
        "grover", "simulate", "--n", "4", "--c", "1", "--x0", "9", "--runs", "1", "--seed", "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_bindings_exit_two() {
    let file = temp_file("coin2.pwp", "x := 1 @ 1/2, 0 @ 1/2\n");
    let out = pwp(&[
        "wp",
        "run",
        file.to_str().unwrap(),
        "--post",
        "x",
        "--bind",
        "oops",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("NAME=EXPR"));

    let out = pwp(&[
        "wp",
        "run",
        file.to_str().unwrap(),
        "--post",
        "x",
        "--bind",
        "y=1/0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prob_prints_both_derivations() {
    let out = pwp(&["grover", "prob", "--n", "4", "--c", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "P_recurrence = 0.25\nP_closed = 0.25\n");

    let out = pwp(&["grover", "prob", "--n", "128", "--c", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("P_recurrence = 0.9956"), "stdout: {text}");
    assert!(text.contains("P_closed = 0.9956"), "stdout: {text}");
}

#[test]
fn sweep_emits_a_well_formed_csv() {
    let out = pwp(&["grover", "sweep", "--n", "4", "--cmax", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(!text.contains('\r'), "line endings must be bare LF");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "C,P_recurrence,P_closed");
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[1], "0,0.25,0.25");
    assert_eq!(lines[2], "1,1,1");
    assert_eq!(lines[5], "4,1,1");
}

#[test]
fn sweep_writes_the_same_csv_to_a_file() {
    let target = Path::new(env!("CARGO_TARGET_TMPDIR")).join("sweep.csv");
    let out = pwp(&[
        "grover",
        "sweep",
        "--n",
        "8",
        "--cmax",
        "10",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let on_disk = fs::read_to_string(&target).expect("CSV was written");
    let on_stdout = stdout(&pwp(&["grover", "sweep", "--n", "8", "--cmax", "10"]));
    assert_eq!(on_disk, on_stdout);
}

#[test]
fn sweep_flags_tolerance_violations_with_exit_one() {
    let out = pwp(&[
        "grover",
        "sweep",
        "--n",
        "128",
        "--cmax",
        "5",
        "--tolerance",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("check failed"),
        "stderr: {}",
        stderr(&out)
    );
    // The CSV itself is still produced in full.
    assert_eq!(stdout(&out).lines().count(), 7);
}

#[test]
fn optimal_covers_every_size_up_to_the_bound() {
    let out = pwp(&["grover", "optimal", "--nmax", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,H_real,C_star,P_at_C_star");
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[4], "4,1,1,1");
    assert!(lines[8].starts_with("8,"), "line: {}", lines[8]);
    assert!(lines[8].ends_with(",2,0.9453125"), "line: {}", lines[8]);
}

#[test]
fn simulate_output_is_byte_identical_across_invocations() {
    let args = [
        "grover", "simulate", "--n", "16", "--c", "3", "--x0", "5", "--runs", "400", "--seed", "99",
    ];
    let first = pwp(&args);
    let second = pwp(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let text = stdout(&first);
    assert!(text.starts_with("hits = "), "stdout: {text}");
    assert!(text.contains("runs = 400"), "stdout: {text}");
    assert!(text.contains("frequency = "), "stdout: {text}");
}

#[test]
fn simulate_hits_certainty_when_one_iteration_suffices() {
    // At size 4 a single iteration succeeds with probability exactly 1, so
    // every sampled run lands on the marked state regardless of seed.
    let out = pwp(&[
        "grover", "simulate", "--n", "4", "--c", "1", "--x0", "2", "--runs", "250", "--seed", "3",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "hits = 250\nruns = 250\nfrequency = 1\n");
}

#[test]
fn series_check_passes_and_reports_each_identity() {
    let out = pwp(&["series", "check", "--n", "128", "--cmax", "40"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        assert!(line.contains("PASS"), "line: {line}");
    }
    assert!(!text.contains("FAIL"));
}

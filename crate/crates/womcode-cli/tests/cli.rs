//! Golden tests for the command-line surface, run against the real binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_womcode"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn construct_two_cell_eight_level_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f28.table");
    let output = run(&[
        "construct",
        "--flash",
        "2",
        "8",
        "--messages",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("t-star = 4"), "{text}");
    assert!(text.contains("m-star = 8"), "{text}");
    assert!(text.contains("solver = optimal"), "{text}");
    assert!(out.exists());
}

#[test]
fn construct_two_cell_four_level_seven_messages() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f24m7.table");
    let output = run(&[
        "construct",
        "--flash",
        "2",
        "4",
        "--messages",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout(&output).contains("t-star = 1"));
}

#[test]
fn construct_single_node_device() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("single.table");
    let output = run(&[
        "construct",
        "--dag",
        fixture("single_node.dag").to_str().unwrap(),
        "--messages",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("t-star = 0"), "{text}");
    assert!(text.contains("m-star = 0"), "{text}");
}

#[test]
fn encode_single_messages_follow_the_worked_example() {
    let table = fixture("worked_example.table");
    let table = table.to_str().unwrap();

    let first = run(&["encode", "--table", table, "--state", "1", "--message", "2"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), "3\n");

    let second = run(&["encode", "--table", table, "--state", "3", "--message", "3"]);
    assert_eq!(stdout(&second), "5\n");
}

#[test]
fn encode_sequence_walks_and_fails_honestly() {
    let table = fixture("worked_example.table");
    let dir = tempfile::tempdir().unwrap();

    let seq = dir.path().join("ok.msgs");
    std::fs::write(&seq, "2\n3\n").unwrap();
    let output = run(&[
        "encode",
        "--table",
        table.to_str().unwrap(),
        "--sequence",
        seq.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output), "3 5\n");

    let failing = dir.path().join("fail.msgs");
    std::fs::write(&failing, "2\n3\n1\n").unwrap();
    let output = run(&[
        "encode",
        "--table",
        table.to_str().unwrap(),
        "--sequence",
        failing.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output), "3 5\nFAIL at 3\n");
}

#[test]
fn decode_reads_the_message_labels() {
    let table = fixture("worked_example.table");
    let table = table.to_str().unwrap();
    assert_eq!(stdout(&run(&["decode", "--table", table, "--state", "3"])), "2\n");
    assert_eq!(stdout(&run(&["decode", "--table", table, "--state", "5"])), "3\n");
}

#[test]
fn out_of_range_message_is_an_input_error() {
    let table = fixture("worked_example.table");
    let output = run(&[
        "encode",
        "--table",
        table.to_str().unwrap(),
        "--state",
        "1",
        "--message",
        "0",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("alphabet"));
}

#[test]
fn corrupted_table_file_is_rejected_at_load() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("worked_example.table")).unwrap();
    let bad = dir.path().join("bad.table");
    std::fs::write(&bad, text.replace("node 5 - 3", "node 5 - 1")).unwrap();
    let output = run(&["verify", "--table", bad.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn verify_passes_on_the_worked_example() {
    let output = run(&[
        "verify",
        "--table",
        fixture("worked_example.table").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("t-star-formula = 2"), "{text}");
    assert!(text.contains("t-star-simulated = 2"), "{text}");
    assert!(text.contains("result = pass"), "{text}");
}

#[test]
fn verify_checks_the_flash_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f28.table");
    run(&[
        "construct",
        "--flash",
        "2",
        "8",
        "--messages",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    let output = run(&["verify", "--table", out.to_str().unwrap(), "--bound", "flash"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("bound = 4"), "{text}");
    assert!(text.contains("bound-in-range = yes"), "{text}");
    assert!(text.contains("meets-bound = yes"), "{text}");
}

#[test]
fn verify_checks_the_imbalance_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("i283.table");
    let build = run(&[
        "construct",
        "--ici",
        "2",
        "8",
        "3",
        "--messages",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(build.status.code(), Some(0));
    let output = run(&["verify", "--table", out.to_str().unwrap(), "--bound", "ici"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("bound = 4"), "{text}");
    assert!(text.contains("meets-bound = yes"), "{text}");
}

#[test]
fn tables_reproduces_the_two_cell_grid() {
    let output = run(&["tables", "--which", "1", "--budget", "120"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("match = 25"), "{text}");
    assert!(text.contains("result = pass"), "{text}");
}

#[test]
fn unknown_table_id_is_an_input_error() {
    let output = run(&["tables", "--which", "9"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn tables_imbalance_bound_grid_reproduces_fully() {
    // Includes the q = 16, 32, 48 stretch columns.
    let output = run(&["tables", "--which", "ici-ub", "--budget", "120"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("match = 8"), "{text}");
    assert!(text.contains("28="), "{text}");
}

#[test]
fn tables_three_cell_grid_reports_the_improvement_cell() {
    // At a short budget the q=8, M=7 cell times out (rendered `--`, exit 3);
    // the q=7, M=7 cell must still realize the published value 8.
    let output = run(&["tables", "--which", "3", "--budget", "5"]);
    assert_eq!(output.status.code(), Some(3));
    let text = stdout(&output);
    let row_m7 = text
        .lines()
        .find(|l| l.starts_with("7 "))
        .expect("M = 7 row present");
    assert!(row_m7.contains("8="), "row was: {row_m7}");
    assert!(text.contains("mismatch = 0"), "{text}");
}

#[test]
fn dag_parse_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let dag = dir.path().join("bad.dag");
    std::fs::write(&dag, "dag 6 1\nedge 1 7\n").unwrap();
    let output = run(&[
        "construct",
        "--dag",
        dag.to_str().unwrap(),
        "--messages",
        "2",
        "--out",
        dir.path().join("x.table").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("out of range"));
}

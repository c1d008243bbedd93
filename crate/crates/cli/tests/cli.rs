//! End-to-end tests that spawn the actual binary.
//!
//! Covers the exit-code contract (0 success, 1 unusable input, 2 failed
//! verification), stderr diagnostics, report determinism and the
//! build/verify round trip.

use std::path::PathBuf;
use std::process::{Command, Output};

const COMPUTATIONAL: &str = r#"{"format_version":1,"kind":"instrument","payload":{"kraus":[
    [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]],
    [[[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]]}}"#;

/// Projective statistics, rotated update: A2 = |0><1| maps outcome 2 to |0>.
const RESET: &str = r#"{"format_version":1,"kind":"instrument","payload":{"kraus":[
    [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]],
    [[[0.0,0.0],[1.0,0.0]],[[0.0,0.0],[0.0,0.0]]]]}}"#;

/// Alice measures the diagonal basis, Bob the computational one, on |0>.
const CROSSED_AGENTS: &str = r#"{"format_version":1,"kind":"agents","payload":{
    "alice_basis":[[[0.7071067811865476,0.0],[0.7071067811865476,0.0]],
                   [[0.7071067811865476,0.0],[-0.7071067811865476,0.0]]],
    "bob_kraus":[[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]],
                 [[[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]],
    "initial_state":[[1.0,0.0],[0.0,0.0]]}}"#;

/// Both agents measure the computational basis; they must always agree.
const MATCHED_AGENTS: &str = r#"{"format_version":1,"kind":"agents","payload":{
    "alice_basis":[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]],
    "bob_kraus":[[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]],
                 [[[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]],
    "initial_state":[[0.7071067811865476,0.0],[0.7071067811865476,0.0]]}}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmeas"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(&dir).expect("scratch dir should be writable");
    dir.join(name)
}

fn write_scratch(name: &str, contents: &str) -> PathBuf {
    let path = scratch(name);
    std::fs::write(&path, contents).expect("scratch file should be writable");
    path
}

fn stdout_str(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout should be UTF-8")
}

fn stderr_str(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr should be UTF-8")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process should exit normally")
}

#[test]
fn missing_file_is_an_input_error() {
    let out = run(&["validate", "/nonexistent/qmeas-no-such-file.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr_str(&out).contains("cannot read"));
    assert!(stdout_str(&out).is_empty());
}

#[test]
fn truncated_file_is_an_input_error() {
    let path = write_scratch("truncated.json", &COMPUTATIONAL[..40]);
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr_str(&out).contains("not valid JSON"));
}

#[test]
fn non_square_matrix_is_named_in_the_error() {
    let text = r#"{"format_version":1,"kind":"instrument","payload":{"kraus":[
        [[[1.0,0.0],[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0],[0.0,0.0]]]]}}"#;
    let path = write_scratch("nonsquare.json", text);
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = stderr_str(&out);
    assert!(err.contains("square"), "stderr was: {err}");
    assert!(err.contains("payload.kraus[0]"), "stderr was: {err}");
}

#[test]
fn incomplete_kraus_family_is_named_in_the_error() {
    let text = COMPUTATIONAL.replace("[[0.0,0.0],[1.0,0.0]]", "[[0.0,0.0],[0.5,0.0]]");
    let path = write_scratch("incomplete.json", &text);
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr_str(&out).contains("completeness"));
}

#[test]
fn validate_classifies_the_computational_instrument() {
    let path = write_scratch("computational.json", COMPUTATIONAL);
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report = stdout_str(&out);
    assert!(report.contains("\"class\":\"repeatable-projective\""));
    assert!(report.contains("\"valid\":true"));
}

#[test]
fn validate_classifies_the_reset_instrument() {
    let path = write_scratch("reset.json", RESET);
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout_str(&out).contains("\"class\":\"projective-povm\""));
}

#[test]
fn dilate_check_confirms_the_meter_model() {
    let path = write_scratch("reset-dilate.json", RESET);
    let out = run(&["dilate", path.to_str().unwrap(), "--check", "--states", "50"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let report = stdout_str(&out);
    assert!(report.contains("\"verified\":true"));
    assert!(report.contains("\"unitary_dim\":4"));
}

#[test]
fn dilate_rejects_non_instrument_files() {
    let path = write_scratch("agents-for-dilate.json", CROSSED_AGENTS);
    let out = run(&["dilate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr_str(&out).contains("instrument"));
}

#[test]
fn agents_json_and_tsv_carry_the_same_numbers() {
    let path = write_scratch("crossed.json", CROSSED_AGENTS);
    let json_out = run(&["agents", "run", path.to_str().unwrap(), "--trials", "500", "--seed", "3"]);
    let tsv_out = run(&[
        "agents", "run", path.to_str().unwrap(),
        "--trials", "500", "--seed", "3", "--format", "tsv",
    ]);
    assert_eq!(code(&json_out), 0);
    assert_eq!(code(&tsv_out), 0);
    let json: serde_json::Value = serde_json::from_str(stdout_str(&json_out).trim()).unwrap();
    let tsv = stdout_str(&tsv_out);
    let tsv_value = |key: &str| -> String {
        tsv.lines()
            .find_map(|line| line.strip_prefix(&format!("{key}\t")))
            .unwrap_or_else(|| panic!("tsv missing key {key}"))
            .to_string()
    };
    assert_eq!(
        tsv_value("agreement_count"),
        json["agreement_count"].to_string()
    );
    assert_eq!(
        tsv_value("empirical_frequency").parse::<f64>().unwrap(),
        json["empirical_frequency"].as_f64().unwrap()
    );
    assert_eq!(
        tsv_value("contingency.1.1"),
        json["contingency"][0][0].to_string()
    );
}

#[test]
fn matched_agents_always_agree() {
    let path = write_scratch("matched.json", MATCHED_AGENTS);
    let out = run(&["agents", "run", path.to_str().unwrap(), "--trials", "2000"]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_str(stdout_str(&out).trim()).unwrap();
    assert_eq!(json["agreement_count"], 2000);
    let predicted = json["predicted_probability"].as_f64().unwrap();
    assert!((predicted - 1.0).abs() < 1e-12);
}

#[test]
fn zero_trials_are_rejected_at_the_command_line() {
    let path = write_scratch("crossed-zero.json", CROSSED_AGENTS);
    let out = run(&["agents", "run", path.to_str().unwrap(), "--trials", "0"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn build_then_verify_succeeds_for_canonical_and_seeded_scenarios() {
    let canonical = scratch("built-canonical.json");
    let out = run(&["ozawa", "build", "--dim", "2", "--out", canonical.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let out = run(&["ozawa", "verify", canonical.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    assert!(stdout_str(&out).contains("\"verified\":true"));

    let seeded = scratch("built-seeded.json");
    let out = run(&[
        "ozawa", "build", "--dim", "3", "--seed", "11", "--out", seeded.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&["ozawa", "verify", seeded.to_str().unwrap(), "--states", "40"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
}

#[test]
fn built_files_are_deterministic() {
    let a = scratch("det-a.json");
    let b = scratch("det-b.json");
    run(&["ozawa", "build", "--dim", "2", "--seed", "5", "--out", a.to_str().unwrap()]);
    run(&["ozawa", "build", "--dim", "2", "--seed", "5", "--out", b.to_str().unwrap()]);
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn corrupting_the_coupling_fails_verification() {
    let path = scratch("to-corrupt.json");
    let out = run(&["ozawa", "build", "--dim", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let needle = "\"unitary\":[[[1.0000000000000000e0";
    assert!(text.contains(needle), "canonical layout changed");
    let corrupted = text.replace(needle, "\"unitary\":[[[1.1000000000000000e0");
    let corrupted_path = write_scratch("corrupted.json", &corrupted);
    let out = run(&["ozawa", "verify", corrupted_path.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr_str(&out));
    let report = stdout_str(&out);
    assert!(report.contains("\"verified\":false"));
    assert!(!stderr_str(&out).is_empty());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let agents = write_scratch("repeat-agents.json", CROSSED_AGENTS);
    let first = run(&["agents", "run", agents.to_str().unwrap(), "--trials", "300", "--seed", "9"]);
    let second = run(&["agents", "run", agents.to_str().unwrap(), "--trials", "300", "--seed", "9"]);
    assert_eq!(first.stdout, second.stdout);

    let instrument = write_scratch("repeat-instrument.json", RESET);
    let first = run(&["dilate", instrument.to_str().unwrap(), "--check", "--states", "20"]);
    let second = run(&["dilate", instrument.to_str().unwrap(), "--check", "--states", "20"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn help_and_version_exit_zero_but_no_arguments_is_an_error() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
}

#[test]
fn unknown_kind_is_an_input_error() {
    let text = COMPUTATIONAL.replace("\"instrument\"", "\"povm\"");
    let path = write_scratch("unknown-kind.json", &text);
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr_str(&out).contains("unknown scenario kind"));
}

#[test]
fn wrong_format_version_is_an_input_error() {
    let text = COMPUTATIONAL.replace("\"format_version\":1", "\"format_version\":3");
    let path = write_scratch("wrong-version.json", &text);
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr_str(&out).contains("format_version 3"));
}

//! End-to-end tests of the cremona binary: exit codes, canonical output,
//! batch mode, replay.

use std::io::Write;
use std::process::{Command, Output, Stdio};

const SEXTIC: &str = r#"{"surface":"plane","class":{"degree":6},
    "points":[{"id":"n","mult":2},{"id":"t1","mult":2},
              {"id":"t2","mult":2,"parent":"t1"}]}"#;

const D2: &str = r#"{"surface":{"hirzebruch":3},"class":{"alpha":3,"beta":11},
    "points":[{"id":"n","mult":2,"on_c0":false}]}"#;

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cremona"));
    cmd.args(args).stdout(Stdio::piped()).stderr(Stdio::piped());
    match stdin {
        Some(input) => {
            cmd.stdin(Stdio::piped());
            let mut child = cmd.spawn().expect("binary spawns");
            child
                .stdin
                .as_mut()
                .unwrap()
                .write_all(input.as_bytes())
                .unwrap();
            child.wait_with_output().unwrap()
        }
        None => {
            cmd.stdin(Stdio::null());
            cmd.output().unwrap()
        }
    }
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

#[test]
fn validate_accepts_and_reports() {
    let out = run(&["validate"], Some(SEXTIC));
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["valid"], serde_json::json!(true));

    let bad = r#"{"surface":"plane","class":{"degree":6},
        "points":[{"id":"a","mult":2},{"id":"b","mult":3,"parent":"a"}]}"#;
    let out = run(&["validate"], Some(bad));
    assert_eq!(out.status.code(), Some(0), "validation reports, not aborts");
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["valid"], serde_json::json!(false));
    let text = report["verdicts"]["violations"].to_string();
    assert!(text.contains("proximity"), "{text}");
}

#[test]
fn schema_errors_exit_one_with_path() {
    let out = run(&["genus"], Some(r#"{"surface":"plane"}"#));
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert!(report["verdicts"]["schema_error"]["message"]
        .as_str()
        .unwrap()
        .contains("class"));

    let out = run(
        &["genus"],
        Some(r#"{"surface":"plane","class":{"degree":3},"points":[],"bogus":true}"#),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn genus_of_the_sextic() {
    let out = run(&["genus"], Some(SEXTIC));
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["genus"], serde_json::json!("7/1"));
}

#[test]
fn discrepancies_are_rational_strings() {
    let out = run(&["discrepancies", "--coeff", "1/2"], Some(SEXTIC));
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(
        report["verdicts"]["entries"]["a(n)"],
        serde_json::json!("0/1")
    );
    assert_eq!(report["verdicts"]["minimum"], serde_json::json!("0/1"));
    // Out-of-range coefficient: validation error.
    let out = run(&["discrepancies", "--coeff", "3/2"], Some(SEXTIC));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn classify_with_and_without_restriction() {
    let out = run(&["classify", "--coeff", "1/2"], Some(SEXTIC));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["class"], serde_json::json!("Canonical"));

    let out = run(&["classify", "--coeff", "1/2", "--along-c0"], Some(D2));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["class"], serde_json::json!("Terminal"));
}

#[test]
fn standard_model_all_enumerates_both_sextic_models() {
    let out = run(&["standard-model", "--all"], Some(SEXTIC));
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let models = report["verdicts"]["models"].as_array().unwrap();
    assert_eq!(models.len(), 2);
    assert_eq!(report["verdicts"]["truncated"], serde_json::json!(false));
}

#[test]
fn minimal_degree_of_d2_is_eight() {
    let out = run(&["minimal-degree"], Some(D2));
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["minimal_degree"], serde_json::json!(8));
    assert_eq!(report["verdicts"]["top_multiplicity"], serde_json::json!(5));
}

#[test]
fn line_equivalence_of_nodal_cubic() {
    let cubic = r#"{"surface":"plane","class":{"degree":3},
        "points":[{"id":"n","mult":2}]}"#;
    let out = run(&["line-equivalence"], Some(cubic));
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(
        report["verdicts"]["status"],
        serde_json::json!("EquivalentToLine")
    );
}

#[test]
fn nf_and_ci_certificates() {
    let out = run(
        &[
            "nf-certificate",
            "--n",
            "3",
            "--d-high",
            "8",
            "--d-low",
            "7",
            "--max-mult",
            "2",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["holds"], serde_json::json!(true));

    let out = run(&["ci-certificate", "-a", "2", "-b", "3", "-k", "2"], None);
    let report = stdout_json(&out);
    assert_eq!(report["verdicts"]["holds"], serde_json::json!(false));
}

#[test]
fn scroll_reduce_trace() {
    let out = run(&["scroll-reduce", "--degree", "5"], None);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    let states = report["verdicts"]["states"].as_array().unwrap();
    assert_eq!(states.len(), 4);
    assert_eq!(states[0]["degree"], serde_json::json!(5));
    assert_eq!(states[3]["line_mult"], serde_json::json!(1));
}

#[test]
fn batch_mode_processes_entries_independently() {
    let batch = format!("[{SEXTIC},{D2}]");
    let out = run(&["genus", "--jobs", "2"], Some(&batch));
    assert_eq!(out.status.code(), Some(0));
    let reports = stdout_json(&out);
    let entries = reports.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["verdicts"]["genus"], serde_json::json!("7/1"));
    assert_eq!(entries[1]["verdicts"]["genus"], serde_json::json!("10/1"));

    // One bad entry: overall exit reflects the failure; the good entry still
    // reports.
    let mixed = format!("[{SEXTIC},{{\"surface\":\"plane\"}}]");
    let out = run(&["genus"], Some(&mixed));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reports_are_deterministic() {
    let a = run(&["standard-model", "--all"], Some(SEXTIC));
    let b = run(&["standard-model", "--all"], Some(SEXTIC));
    assert_eq!(a.stdout, b.stdout, "identical inputs, identical bytes");
}

#[test]
fn replay_round_trip_and_corruption_detection() {
    let dir = std::env::temp_dir().join(format!("cremona-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let report_path = dir.join("report.json");

    let out = run(
        &["minimal-degree", "--output", report_path.to_str().unwrap()],
        Some(
            r#"{"surface":"plane","class":{"degree":7},
            "points":[{"id":"p1","mult":4},{"id":"p2","mult":2,"parent":"p1"},
                      {"id":"p3","mult":2,"parent":"p2"}]}"#,
        ),
    );
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["replay", "--trace", report_path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(
        report["verdicts"]["replayed"][0]["final_state"],
        serde_json::json!("P2 degree 6")
    );

    // Corrupt the recorded class and expect a hard failure (exit 2).
    let mut content = std::fs::read_to_string(&report_path).unwrap();
    content = content.replace("\"beta\": 8", "\"beta\": 9");
    let corrupted = dir.join("corrupted.json");
    std::fs::write(&corrupted, content).unwrap();
    let out = run(&["replay", "--trace", corrupted.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().all(|l| l.is_empty() || l.starts_with("PASS")));
}

#[test]
fn text_format_is_tabular() {
    let out = run(&["genus", "--format", "text"], Some(SEXTIC));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("command   genus"));
    assert!(text.contains("genus"));
}

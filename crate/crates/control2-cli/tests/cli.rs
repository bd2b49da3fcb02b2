//! End-to-end tests of the `control2` binary: flag validation, exit codes,
//! report schema, and determinism of the emitted JSON.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_control2"))
}

fn run_args(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("control2-test-{}-{}", std::process::id(), name));
    p
}

#[test]
fn small_run_passes_and_writes_schema_conformant_report() {
    let out = tmp_path("report.json");
    let result = run_args(&[
        "--N",
        "1",
        "--r-max",
        "3",
        "--precision",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&result.stdout),
        String::from_utf8_lossy(&result.stderr)
    );

    // one human line per check plus a summary line
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("lemma-2.1")));
    assert!(stdout.lines().any(|l| l.starts_with("theorem-4.1")));
    assert!(stdout.lines().last().unwrap().starts_with("summary:"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["version"].is_string());
    assert!(report["config"].is_object());
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for check in checks {
        assert!(check["id"].is_string());
        assert!(check["params"]["N"].is_u64());
        assert!(check["params"].get("r").is_some());
        assert!(check["params"].get("s").is_some());
        assert!(check["params"].get("k").is_some());
        assert!(matches!(
            check["status"].as_str().unwrap(),
            "pass" | "fail" | "skipped"
        ));
        assert!(check.get("witness").is_some());
        assert!(check["ms"].is_u64());
    }
    assert!(report["summary"]["d_by_N"].is_object());
    assert!(report["summary"]["stable"].is_boolean());

    std::fs::remove_file(&out).ok();
}

#[test]
fn rejects_even_n() {
    let result = run_args(&["--N", "2"]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("--N"), "stderr: {stderr}");
}

#[test]
fn rejects_r_max_below_tower_base() {
    let result = run_args(&["--r-max", "1"]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("r-max") || stderr.contains("r-min"), "stderr: {stderr}");
}

#[test]
fn rejects_bad_precision_and_unknown_check() {
    assert_eq!(run_args(&["--precision", "2"]).status.code(), Some(2));
    assert_eq!(run_args(&["--precision", "99"]).status.code(), Some(2));
    assert_eq!(run_args(&["--checks", "lemma-9.9"]).status.code(), Some(2));
}

#[test]
fn unparseable_flag_exits_2() {
    let result = run_args(&["--r-max", "soon"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let result = run_args(&[
        "--N",
        "1",
        "--r-max",
        "2",
        "--precision",
        "8",
        "--checks",
        "lemma-2.1",
        "--out",
        "/nonexistent-dir/report.json",
    ]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn selected_checks_only() {
    let result = run_args(&["--N", "1", "--r-max", "3", "--checks", "lemma-2.1"]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    let check_lines: Vec<&str> = stdout
        .lines()
        .filter(|l| !l.starts_with("summary:"))
        .collect();
    assert!(!check_lines.is_empty());
    assert!(check_lines.iter().all(|l| l.starts_with("lemma-2.1")));
}

#[test]
fn coset_bound_violation_exits_3() {
    let result = run_args(&[
        "--N",
        "1",
        "--r-max",
        "3",
        "--precision",
        "8",
        "--checks",
        "rank-formula",
        "--coset-bound",
        "4",
    ]);
    assert_eq!(result.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("skipped"));
}

#[test]
fn reports_are_deterministic_modulo_timing() {
    let out1 = tmp_path("det1.json");
    let out2 = tmp_path("det2.json");
    for out in [&out1, &out2] {
        let result = run_args(&[
            "--N",
            "1,3",
            "--r-max",
            "3",
            "--precision",
            "8",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success());
    }
    let mut a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out1).unwrap()).unwrap();
    let mut b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out2).unwrap()).unwrap();
    for v in [&mut a, &mut b] {
        for check in v["checks"].as_array_mut().unwrap() {
            check["ms"] = 0.into();
        }
    }
    // byte comparison after isolating the timing field
    assert_eq!(
        serde_json::to_string_pretty(&a).unwrap(),
        serde_json::to_string_pretty(&b).unwrap()
    );
    std::fs::remove_file(&out1).ok();
    std::fs::remove_file(&out2).ok();
}

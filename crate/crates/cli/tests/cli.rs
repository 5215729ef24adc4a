//! End-to-end tests of the `exflow` binary.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn exflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("exflow-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn systems_lists_builtins() {
    let out = exflow(&["systems"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["saddle", "torus-height", "limit-cycle", "irrational"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn analyze_writes_report_and_image() {
    let json = tmp("analyze.json");
    let ppm = tmp("analyze.ppm");
    let out = exflow(&[
        "analyze",
        "--system",
        "saddle",
        "--grid",
        "16",
        "--tau",
        "0.5",
        "--bloat",
        "1",
        "--levels",
        "1",
        "--out",
        json.to_str().unwrap(),
        "--render",
        ppm.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report = fs::read_to_string(&json).unwrap();
    assert!(report.contains("\"schema_version\": \"1\""));
    let image = fs::read(&ppm).unwrap();
    assert!(image.starts_with(b"P6\n16 16\n255\n"));
    assert_eq!(image.len(), "P6\n16 16\n255\n".len() + 3 * 256);

    fs::remove_file(&json).ok();
    fs::remove_file(&ppm).ok();
}

#[test]
fn analyze_runs_are_byte_identical() {
    let a = tmp("det-a.json");
    let b = tmp("det-b.json");
    let a_ppm = tmp("det-a.ppm");
    let b_ppm = tmp("det-b.ppm");
    for (json, ppm) in [(&a, &a_ppm), (&b, &b_ppm)] {
        let out = exflow(&[
            "analyze",
            "--system",
            "irrational",
            "--grid",
            "16",
            "--out",
            json.to_str().unwrap(),
            "--render",
            ppm.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&a_ppm).unwrap(), fs::read(&b_ppm).unwrap());
    for p in [a, b, a_ppm, b_ppm] {
        fs::remove_file(p).ok();
    }
}

#[test]
fn analyze_rejects_unknown_system_with_code_2() {
    let out = exflow(&["analyze", "--system", "nope", "--out", "/tmp/never.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown system"));
}

#[test]
fn analyze_accepts_param_overrides() {
    let json = tmp("params.json");
    let out = exflow(&[
        "analyze",
        "--system",
        "saddle",
        "--grid",
        "16",
        "--param",
        "l1=2.0",
        "--param",
        "l2=-0.5",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(&json).unwrap();
    assert!(report.contains("\"l1\": 2.0"));
    fs::remove_file(&json).ok();
}

#[test]
fn check_analyzes_graph_files() {
    let graph = tmp("g1.json");
    let report = tmp("g1-report.json");
    fs::write(
        &graph,
        r#"{"n": 5, "dyn": [[0,1],[1,2],[1,4],[2,3],[3,2],[4,4]], "adj": [[0,1],[1,2],[2,3]]}"#,
    )
    .unwrap();
    let out = exflow(&[
        "check",
        "--graph",
        graph.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("\"unresolved\": 2"));
    fs::remove_file(&graph).ok();
    fs::remove_file(&report).ok();
}

#[test]
fn check_rejects_invalid_graphs_with_code_2() {
    let graph = tmp("bad.json");
    fs::write(&graph, r#"{"n": 2, "dyn": [[0,1]], "adj": []}"#).unwrap();
    let out = exflow(&[
        "check",
        "--graph",
        graph.to_str().unwrap(),
        "--out",
        "/tmp/never.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("F-totality"));

    fs::write(&graph, "{not json").unwrap();
    let out = exflow(&[
        "check",
        "--graph",
        graph.to_str().unwrap(),
        "--out",
        "/tmp/never.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    fs::remove_file(&graph).ok();
}

#[test]
fn missing_output_directory_exits_with_code_4() {
    let out = exflow(&[
        "analyze",
        "--system",
        "saddle",
        "--grid",
        "16",
        "--out",
        "/nonexistent-dir/report.json",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

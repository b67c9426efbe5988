//! Black-box tests of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mirage-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn cipher_test_passes_on_bundled_vectors() {
    let out = run(&["cipher-test"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("0 failures"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn cipher_test_fails_with_exit_4_on_bad_vector() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.csv");
    std::fs::write(&path, "present80,0,0,1234567812345678\n").unwrap();
    let out = run(&["cipher-test", "--vectors", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "no_such_key = 1\n").unwrap();
    let out = run(&["cipher-test", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_template_store_exits_3() {
    let out = run(&[
        "template",
        "classify",
        "--store",
        "/nonexistent/store.csv",
        "--misses",
        "450",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn analytic_birthday_prints_both_bounds() {
    let out = run(&["analytic", "--birthday", "--bits", "28"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("16384"), "got: {text}");
    assert!(text.contains("1929"), "got: {text}"); // exact ~= 19,290
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn covert_outputs_are_byte_identical_across_reruns_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (sub, jobs) in [("a", "1"), ("b", "2"), ("c", "1")] {
        let out_dir = dir.path().join(sub);
        let out = run(&[
            "covert",
            "--nbits",
            "6",
            "--seed",
            "42",
            "--jobs",
            jobs,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        outputs.push(read_outputs(&out_dir));
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1], "jobs=2 changed output bytes");
    assert_eq!(outputs[0], outputs[2], "re-run changed output bytes");
}

#[test]
fn template_build_then_classify_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    // A small sweep keeps the test quick; spacing stays at 2000 accesses.
    std::fs::write(&cfg, "template_counts = 1000,3000\ntrials = 10\n").unwrap();
    let out = run(&[
        "template",
        "build",
        "--plot",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let store = dir.path().join("run/template_store.csv");
    assert!(store.exists());
    assert!(dir.path().join("run/template_distributions.svg").exists());
    let manifest = std::fs::read_to_string(dir.path().join("run/manifest.txt")).unwrap();
    assert!(manifest.contains("template_store.csv"));

    // A miss count near a template's center classifies as that template.
    let summary = std::fs::read_to_string(dir.path().join("run/template_summary.csv")).unwrap();
    let first_mean: f64 = summary
        .lines()
        .find(|l| l.starts_with("1000,"))
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    let out = run(&[
        "template",
        "classify",
        "--store",
        store.to_str().unwrap(),
        "--misses",
        &format!("{}", first_mean.round() as u64),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("victim_accesses=1000"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn polytope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polytope")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = polytope(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn diagnostic(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

/// The row starting with `label`, split on whitespace after the label.
fn row<'a>(table: &'a str, label: &str) -> Vec<&'a str> {
    let line = table
        .lines()
        .find(|l| l.starts_with(label) && l[label.len()..].starts_with("  "))
        .unwrap_or_else(|| panic!("no row {label:?} in\n{table}"));
    line[label.len()..].split_whitespace().collect()
}

fn f(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn empty_log_scores_every_system_100() {
    let out = stdout(&["score", "--corpus", &f("unequal.jsonl"), "--annotations", &f("empty_log.jsonl")]);
    assert_eq!(row(&out, "PolyTope Score (macro)"), ["100.00", "100.00"]);
    assert_eq!(row(&out, "PolyTope Score (micro)"), ["100.00", "100.00"]);
    assert_eq!(row(&out, "Errors"), ["0", "0"]);
}

#[test]
fn micro_and_macro_differ_on_unequal_word_counts() {
    let corpus = f("unequal.jsonl");
    let log = f("unequal_log.jsonl");
    let base = ["score", "--corpus", &corpus, "--annotations", &log, "--system", "sys"];
    let micro = stdout(&[&base[..], &["--aggregation", "micro"]].concat());
    let macro_ = stdout(&[&base[..], &["--aggregation", "macro"]].concat());
    assert_eq!(row(&micro, "PolyTope Score"), ["95.00"]);
    assert_eq!(row(&macro_, "PolyTope Score"), ["90.00"]);
    assert_eq!(row(&micro, "Errors / 1k Words"), ["5.00"]);
}

#[test]
fn precision_flag_and_delimited_output() {
    let corpus = f("unequal.jsonl");
    let log = f("rater.jsonl");
    let out = stdout(&[
        "score",
        "--corpus",
        &corpus,
        "--annotations",
        &log,
        "--system",
        "sys",
        "--aggregation",
        "macro",
        "--precision",
        "4",
        "--format",
        "delimited",
    ]);
    // s1: 80, s2: 100 * (150 - 10) / 150
    let line = out.lines().find(|l| l.starts_with("PolyTope Score,")).unwrap();
    assert_eq!(line, "PolyTope Score,86.6667");
    assert!(out.starts_with("metric,sys\n"));
}

#[test]
fn per_sample_rows() {
    let out = stdout(&[
        "score",
        "--corpus",
        &f("unequal.jsonl"),
        "--annotations",
        &f("unequal_log.jsonl"),
        "--system",
        "sys",
        "--per-sample",
    ]);
    assert!(out.contains("80.00") && out.contains("100.00"), "{out}");
}

#[test]
fn rouge_hand_oracle() {
    let out = stdout(&["rouge", "--corpus", &f("hand_oracle.jsonl"), "--system", "sys"]);
    let mean = row(&out, "mean");
    assert_eq!(mean[2], "0.600");
    assert_eq!(mean[5], "0.250");
    assert_eq!(mean[8], "0.600");
}

#[test]
fn no_stem_changes_running_vs_run() {
    let corpus = f("stemming.jsonl");
    let stemmed = stdout(&["rouge", "--corpus", &corpus, "--system", "sys"]);
    let plain = stdout(&["rouge", "--corpus", &corpus, "--system", "sys", "--no-stem"]);
    assert_ne!(stemmed, plain);
    assert_eq!(row(&stemmed, "mean")[2], "0.857");
    assert_eq!(row(&plain, "mean")[2], "0.571");
}

#[test]
fn correlate_system_table() {
    let out = stdout(&["correlate", "--systems", &f("system_scores.csv")]);
    assert_eq!(row(&out, "System"), ["PolyTope", "0.78", "0.73", "0.52"]);
}

#[test]
fn agreement_of_duplicated_logs_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("first.jsonl");
    let b = dir.path().join("second.jsonl");
    std::fs::copy(fixture("rater.jsonl"), &a).unwrap();
    std::fs::copy(fixture("rater.jsonl"), &b).unwrap();
    let out = stdout(&[
        "agreement",
        "--corpus",
        &f("unequal.jsonl"),
        "--log",
        a.to_str().unwrap(),
        "--log",
        b.to_str().unwrap(),
    ]);
    assert_eq!(row(&out, "first"), ["second", "4", "1.0000"]);
    assert_eq!(row(&out, "mean"), ["1.0000"]);
}

#[test]
fn agreement_on_same_file_twice_gets_distinct_names() {
    let log = f("rater.jsonl");
    let out = stdout(&["agreement", "--corpus", &f("unequal.jsonl"), "--log", &log, "--log", &log]);
    assert_eq!(row(&out, "rater"), ["rater#2", "4", "1.0000"]);
}

#[test]
fn layout_lead3_mass_on_first_three() {
    let out = stdout(&["layout", "--corpus", &f("lead3.jsonl"), "--system", "lead3"]);
    for p in ["1", "2", "3"] {
        assert_eq!(row(&out, p)[..2], ["100", "0.3333"]);
    }
    for p in 4..=10 {
        assert_eq!(row(&out, &p.to_string())[..2], ["0", "0.0000"]);
    }
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let runs: Vec<Vec<&str>> = vec![
        vec!["score", "--corpus", "unequal.jsonl", "--annotations", "rater.jsonl"],
        vec!["rouge", "--corpus", "hand_oracle.jsonl", "--system", "sys"],
        vec!["layout", "--corpus", "lead3.jsonl", "--system", "lead3", "--format", "csv"],
        vec!["export", "log", "--corpus", "unequal.jsonl", "--annotations", "rater.jsonl"],
    ];
    for args in runs {
        let args: Vec<String> = args.iter().map(|a| if a.ends_with(".jsonl") { f(a) } else { a.to_string() }).collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(polytope(&args).stdout, polytope(&args).stdout, "{args:?}");
    }
}

#[test]
fn export_round_trips_corpus_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let log = dir.path().join("log.jsonl");
    stdout(&["export", "corpus", "--corpus", &f("unequal.jsonl"), "-o", corpus.to_str().unwrap()]);
    stdout(&[
        "export",
        "log",
        "--corpus",
        corpus.to_str().unwrap(),
        "--annotations",
        &f("rater.jsonl"),
        "-o",
        log.to_str().unwrap(),
    ]);
    let again = stdout(&["export", "corpus", "--corpus", corpus.to_str().unwrap()]);
    assert_eq!(again.as_bytes(), std::fs::read(&corpus).unwrap());
    let a = stdout(&["score", "--corpus", &f("unequal.jsonl"), "--annotations", &f("rater.jsonl")]);
    let b = stdout(&["score", "--corpus", corpus.to_str().unwrap(), "--annotations", log.to_str().unwrap()]);
    assert_eq!(a, b);
}

#[test]
fn validate_summarizes() {
    let out = stdout(&["validate", "--corpus", &f("unequal.jsonl"), "--annotations", &f("rater.jsonl")]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["samples"], 2);
    assert_eq!(v["annotations"], 7);
    assert_eq!(v["systems"], serde_json::json!(["alt", "sys"]));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(polytope(&["score"]).status.code(), Some(1));
    assert_eq!(polytope(&["bogus"]).status.code(), Some(1));
    assert_eq!(polytope(&["rouge", "--corpus", "x", "--system", "s", "--lcs", "diagonal"]).status.code(), Some(1));
    assert_eq!(polytope(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_exits_3_with_path() {
    let out = polytope(&["validate", "--corpus", "/nonexistent/corpus.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    let d = diagnostic(&out);
    assert_eq!(d["error"]["code"], "Io");
    assert_eq!(d["error"]["path"], "/nonexistent/corpus.jsonl");
}

#[test]
fn bad_record_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.jsonl");
    let good = std::fs::read_to_string(fixture("unequal_log.jsonl")).unwrap();
    let bad = good.replace("\"Critical\"", "\"Minor\"");
    std::fs::write(&log, format!("{good}{bad}")).unwrap();
    let out = polytope(&["validate", "--corpus", &f("unequal.jsonl"), "--annotations", log.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let d = diagnostic(&out);
    assert_eq!(d["error"]["line"], 2);
    assert_eq!(d["error"]["path"], log.to_str().unwrap());

    let out = polytope(&["validate", "--corpus", &f("unequal.jsonl"), "--annotations", &f("lead3.jsonl")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&out)["error"]["line"], 1);
}

#[test]
fn undefined_correlation_is_a_data_error() {
    let out = polytope(&["correlate", "--corpus", &f("unequal.jsonl"), "--annotations", &f("rater.jsonl")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(diagnostic(&out)["error"]["code"].is_string());
}

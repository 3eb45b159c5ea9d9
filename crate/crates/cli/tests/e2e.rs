//! Drives the built binary through the whole pipeline on a synthetic bundle.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jstrack(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_jstrack"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    out
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = jstrack(dir, args);
    assert!(
        out.status.success(),
        "jstrack {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn rows(path: &Path) -> usize {
    // Text tables: header and rule, then one line per row.
    fs::read_to_string(path).unwrap().lines().count() - 2
}

#[test]
fn full_pipeline_writes_all_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "bundle", "--size", "240", "--pages", "12"]);
    ok(d, &["ingest", "bundle", "--tool", "off", "--labels", "bundle/labels.tsv", "--out", "off/manifest.tsv"]);
    ok(d, &["ingest", "bundle", "--tool", "AP", "--out", "on/manifest.tsv"]);

    // Fixed parameters keep the 15-model validation quick.
    let fixed = ["--nu", "0.1", "--gamma", "0.5"];
    let mut args = vec!["validate", "off/manifest.tsv", "--out", "reports/validation.txt"];
    args.extend(fixed);
    ok(d, &args);
    assert_eq!(rows(&d.join("reports/validation.txt")), 15);

    ok(d, &["train", "off/manifest.tsv", "--features", "seq7", "--model", "ocsvm", "--out", "model.txt"]);
    ok(d, &["classify", "model.txt", "off/manifest.tsv", "--out", "preds.tsv"]);
    assert_eq!(fs::read_to_string(d.join("preds.tsv")).unwrap().lines().count(), 240);
    ok(d, &["evaluate", "--labels", "off/manifest.tsv", "--predictions", "preds.tsv", "--out", "reports/evaluation.txt"]);
    ok(
        d,
        &[
            "aggressiveness",
            "--off",
            "off/manifest.tsv",
            "--on",
            "on/manifest.tsv",
            "--surrogates",
            "bundle/surrogates.txt",
            "--out",
            "reports/aggressiveness.txt",
        ],
    );
    ok(d, &["agree", "--classifier", "preds.tsv", "--tool", "bundle/tool_AP.tsv", "--out", "reports/agreement.txt"]);
    ok(d, &["simbench", "off/manifest.tsv", "--out", "reports/similarity.txt"]);

    for r in ["validation", "evaluation", "aggressiveness", "agreement", "similarity"] {
        let p = d.join(format!("reports/{r}.txt"));
        assert!(rows(&p) > 0, "{r} report is empty");
    }
    assert_eq!(rows(&d.join("reports/agreement.txt")), 6);
    assert_eq!(rows(&d.join("reports/similarity.txt")), 20);
}

#[test]
fn validation_is_reproducible_under_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "b", "--size", "120", "--pages", "6", "--seed", "3"]);
    ok(d, &["ingest", "b", "--tool", "off", "--labels", "b/labels.tsv", "--out", "m/manifest.tsv"]);
    let run = |out: &str| {
        ok(
            d,
            &["validate", "m/manifest.tsv", "--features", "seq4", "--grid-search", "--seed", "5", "--format", "jsonl", "--out", out],
        );
        fs::read(d.join(out)).unwrap()
    };
    let a = run("a.jsonl");
    assert_eq!(a, run("b.jsonl"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 3);
}

#[test]
fn sequential_and_parallel_runs_match() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "b", "--size", "96", "--pages", "4"]);
    ok(d, &["ingest", "b", "--tool", "off", "--labels", "b/labels.tsv", "--out", "m/manifest.tsv"]);
    let one = ok(d, &["validate", "m/manifest.tsv", "--features", "pdg4", "--nu", "0.2", "--gamma", "0.5", "--threads", "1"]);
    let many = ok(d, &["validate", "m/manifest.tsv", "--features", "pdg4", "--nu", "0.2", "--gamma", "0.5", "--threads", "4"]);
    assert_eq!(one, many);
}

#[test]
fn config_file_mirrors_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "b", "--size", "96", "--pages", "4"]);
    ok(d, &["ingest", "b", "--tool", "off", "--labels", "b/labels.tsv", "--out", "m/manifest.tsv"]);
    fs::write(d.join("cfg.toml"), "features = \"seq4\"\nformat = \"jsonl\"\n").unwrap();
    let from_config = ok(d, &["simbench", "m/manifest.tsv", "--config", "cfg.toml"]);
    assert!(from_config.lines().all(|l| l.contains("\"features\":\"seq4\"")));
    let overridden = ok(d, &["simbench", "m/manifest.tsv", "--config", "cfg.toml", "--features", "seq7"]);
    assert!(overridden.lines().all(|l| l.contains("\"features\":\"seq7\"")));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(jstrack(d, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(jstrack(d, &["validate", "missing.tsv"]).status.code(), Some(2));
    assert_eq!(jstrack(d, &["validate", "missing.tsv", "--nu", "0.1"]).status.code(), Some(1));
    // Too few tracking records for the protocol is a data error.
    ok(d, &["synth", "b", "--size", "12", "--pages", "2"]);
    ok(d, &["ingest", "b", "--tool", "off", "--labels", "b/labels.tsv", "--out", "m/manifest.tsv"]);
    let out = jstrack(d, &["validate", "m/manifest.tsv", "--features", "seq4", "--model", "ocsvm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 10 tracking"));
    assert_eq!(jstrack(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn single_script_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("eq.js"), "function equalTest(a, b){\n\tif(a == b){\n\t\treturn true;}\n\treturn false;}\n").unwrap();
    assert_eq!(
        ok(d, &["canonicalize", "eq.js"]),
        "begin\n$0 = v0 === v1\nif($0)\n  return true\nreturn false\nend\n"
    );
    assert!(ok(d, &["pdg", "eq.js"]).starts_with("digraph"));
    fs::write(d.join("min.js"), "function f(a){if(a){return 1}return 2}").unwrap();
    assert!(ok(d, &["unpack", "min.js"]).lines().count() > 1);
    fs::write(d.join("bad.js"), "var s = \"unterminated;\n").unwrap();
    assert_eq!(jstrack(d, &["canonicalize", "bad.js"]).status.code(), Some(2));
}

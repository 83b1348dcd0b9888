use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_clipwise")).current_dir(dir).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap_or(Value::Null)
}

#[test]
fn demo_train_and_score() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    run(d, &["demo", "--out", "data", "--videos", "200"]);
    let common = ["--corpus", "data/corpus.jsonl", "--embeddings", "data/embeddings.txt", "--models-dir", "models"];

    let summary = run(d, &[&["train-headline"], &common[..]].concat());
    // Smoke check only; accuracy targets live in the acceptance suite.
    assert!(summary["test_accuracy"].as_f64().unwrap() > 0.7, "{summary}");
    let s = run(d, &[&["score", "headline", "--title", "amazing w001 w002"], &common[..]].concat());
    assert!(s["probability_popular"].as_f64().unwrap() > 0.5, "{s}");

    run(d, &[&["train-thumbnail", "--inputs", "data/thumbnails"], &common[..]].concat());
    let s = run(d, &[&["score", "thumbnail", "--features", "data/thumbnails/h00000.fvec"], &common[..]].concat());
    assert_eq!(s["recommended"], 0, "{s}");

    run(d, &[&["train-opening", "--inputs", "data/openings"], &common[..]].concat());
    let s = run(d, &[&["score", "video", "--features", "data/openings/h00000.fvec"], &common[..]].concat());
    assert_eq!(s["frame_attention"].as_array().unwrap().len(), 18, "{s}");

    let index = run(d, &[&["index"], &common[..]].concat());
    assert!(index.as_object().is_some_and(|o| !o.is_empty()), "{index}");

    std::fs::write(d.join("a.txt"), "100 100 100").unwrap();
    std::fs::write(d.join("b.txt"), "112.9\n112.9 112.9").unwrap();
    let ab = run(d, &["ab", "--group-a", "a.txt", "--group-b", "b.txt", "--resamples", "100"]);
    assert!((ab["lift_percent"].as_f64().unwrap() - 12.9).abs() < 1e-9, "{ab}");
}

#[test]
fn bad_inputs_fail_with_messages() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_clipwise"))
        .current_dir(tmp.path())
        .args(["train-headline", "--corpus", "missing.jsonl", "--embeddings", "e.txt"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));
}

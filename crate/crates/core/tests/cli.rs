use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pmdisc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmdisc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(dir: &Path, args: &[&str]) -> (i32, Value) {
    let mut a = args.to_vec();
    a.push("--json");
    let out = pmdisc(dir, &a);
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v)
}

fn generate(dir: &Path, kind: &str, file: &str, extra: &[&str]) {
    let mut a = vec!["generate", kind, file];
    a.extend_from_slice(extra);
    assert_eq!(pmdisc(dir, &a).status.code(), Some(0), "generate {kind}");
}

#[test]
fn validate_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    generate(d, "cns", "cns.json", &[]);
    let (code, v) = json(d, &["validate", "cns.json"]);
    assert_eq!(code, 0);
    assert_eq!(v["valid"], true);
    assert!(v["lv_residual"].as_f64().unwrap() < 1e-12);

    let zeros = vec![vec![0.0; 16]; 16];
    let zero = serde_json::json!({
        "dims": [{"name": "AI", "dim": 2}, {"name": "AO", "dim": 2},
                 {"name": "BI", "dim": 2}, {"name": "BO", "dim": 2}],
        "re": zeros, "im": zeros,
    });
    std::fs::write(d.join("zero.json"), zero.to_string()).unwrap();
    let (code, v) = json(d, &["validate", "zero.json"]);
    assert_eq!(code, 1);
    assert!((v["trace_residual"].as_f64().unwrap() - 4.0).abs() < 1e-12);

    std::fs::write(d.join("bad.json"), "{\"dims\": [").unwrap();
    assert_eq!(json(d, &["validate", "bad.json"]).0, 2);
    assert_eq!(json(d, &["validate", "missing.json"]).0, 2);
    assert_eq!(pmdisc(d, &["validate"]).status.code(), Some(2));
}

#[test]
fn psucc_examples() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    generate(d, "random", "w.json", &["--seed", "3"]);
    let (code, v) = json(d, &["psucc", "w.json", "w.json", "--out", "same"]);
    assert_eq!(code, 0);
    assert!((v["p_succ"].as_f64().unwrap() - 0.5).abs() < 1e-7);
    assert!(d.join("same/S0.json").exists() && d.join("same/S1.json").exists());

    generate(d, "perfect-ab", "pab.json", &["--seed", "7"]);
    generate(d, "perfect-ba", "pba.json", &["--seed", "7"]);
    let (code, v) = json(
        d,
        &[
            "psucc",
            "pab.json",
            "pba.json",
            "--realize",
            "--out",
            "perf",
        ],
    );
    assert_eq!(code, 0);
    assert!(v["p_succ"].as_f64().unwrap() > 1.0 - 1e-5);
    assert!((v["realization"]["replayed_probability"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    for f in ["S0", "S1", "K", "Q0", "Q1"] {
        assert!(d.join(format!("perf/{f}.json")).exists(), "{f}");
    }
    assert_eq!(json(d, &["validate", "perf/S0.json"]).0, 1);

    generate(d, "cns", "cns.json", &[]);
    generate(d, "maximally-mixed", "mm.json", &[]);
    let (code, v) = json(d, &["psucc", "cns.json", "mm.json", "--out", "cm"]);
    assert_eq!(code, 0);
    assert_eq!(v["strategy"]["feasible"], true);
    let p = v["p_succ"].as_f64().unwrap();
    assert!((v["strategy"]["replayed_probability"].as_f64().unwrap() - p).abs() < 1e-7);
    assert!(v["gap"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn psucc_adaptive_and_errors() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    generate(d, "comb-ab", "a.json", &["--seed", "1"]);
    generate(d, "comb-ab", "b.json", &["--seed", "2"]);
    let (code, v) = json(
        d,
        &["psucc", "a.json", "b.json", "--adaptive", "--out", "o"],
    );
    assert_eq!(code, 0);
    let p = v["p_succ"].as_f64().unwrap();
    assert!((v["p_adapt"].as_f64().unwrap() - p).abs() < 1e-5);

    generate(d, "random", "q.json", &["--dim", "1"]);
    assert_eq!(json(d, &["psucc", "a.json", "q.json", "--out", "o"]).0, 1);
    generate(d, "cns", "cns.json", &[]);
    assert_eq!(
        json(
            d,
            &["psucc", "cns.json", "a.json", "--adaptive", "--out", "o"]
        )
        .0,
        1
    );
}

#[test]
fn distance_examples() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    generate(d, "cns", "cns.json", &[]);
    for (set, want) in [("free", 1.0), ("sep", 1.0 - 0.5f64.sqrt())] {
        let (code, v) = json(d, &["distance", "cns.json", "--set", set, "--out", set]);
        assert_eq!(code, 0);
        assert!(
            (v["distance"].as_f64().unwrap() - want).abs() < 1e-4,
            "{set}: {v}"
        );
        assert_eq!(v["closest"]["valid"], true);
        assert_eq!(json(d, &["validate", &format!("{set}/closest.json")]).0, 0);
    }
    generate(d, "free", "f.json", &["--seed", "5"]);
    let (_, v) = json(d, &["distance", "f.json", "--set", "free", "--out", "f"]);
    assert!(v["distance"].as_f64().unwrap() < 1e-6);
    assert_eq!(
        pmdisc(d, &["distance", "f.json", "--set", "nope"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn classify_and_basenorm() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    generate(d, "cns", "cns.json", &[]);
    generate(d, "comb-ba", "ba.json", &["--seed", "4"]);
    assert_eq!(
        json(d, &["classify", "cns.json"]).1["class"],
        "unclassified"
    );
    assert_eq!(json(d, &["classify", "ba.json"]).1["class"], "comb-ba");
    let (code, v) = json(d, &["basenorm", "cns.json", "--samples", "5"]);
    assert_eq!(code, 0);
    // a process matrix has unit base norm
    assert!((v["base_norm"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(v["sampled_lower_bound"].as_f64().unwrap() <= 1.0 + 1e-6);
}

#[test]
fn demo_perfect_transcripts() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    for dim in ["2", "3"] {
        let (code, v) = json(d, &["demo-perfect", "--dim", dim, "--seed", "0"]);
        assert_eq!(code, 0);
        assert!((v["probability"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(v["shift_pattern"], true);
    }
    assert_eq!(json(d, &["demo-perfect", "--dim", "1"]).0, 1);
}

#[test]
fn cone_report_is_seeded() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let (code, v) = json(d, &["cone-report", "--samples", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["forward"].as_array().unwrap().len(), 0);
    let a = pmdisc(
        d,
        &["cone-report", "--samples", "15", "--seed", "4", "--json"],
    );
    let b = pmdisc(
        d,
        &["cone-report", "--samples", "15", "--seed", "4", "--json"],
    );
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["max_forward_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn generate_is_seeded() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    generate(d, "random", "a.json", &["--seed", "9", "--dim", "3"]);
    generate(d, "random", "b.json", &["--seed", "9", "--dim", "3"]);
    assert_eq!(
        std::fs::read(d.join("a.json")).unwrap(),
        std::fs::read(d.join("b.json")).unwrap()
    );
    assert_eq!(json(d, &["validate", "a.json"]).0, 0);
    assert_eq!(
        pmdisc(d, &["generate", "cns", "c.json", "--dim", "3"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn text_output_is_key_value_lines() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    generate(d, "cns", "cns.json", &[]);
    let out = pmdisc(d, &["validate", "cns.json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "valid: true"));
}

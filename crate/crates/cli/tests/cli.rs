mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use glimpse_core::pipeline::demo_group;
use serde_json::Value;

fn glimpse(args: &[&str], extra: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_glimpse"));
    cmd.args(args).env("RUST_LOG", "error");
    for p in extra {
        cmd.arg(p);
    }
    cmd.output().unwrap()
}

fn run(sub: &str, corpus: &Path, out: &Path, flags: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_glimpse"));
    cmd.arg(sub)
        .arg("--input.path")
        .arg(corpus)
        .arg("--output.dir")
        .arg(out)
        .args(flags)
        .env("RUST_LOG", "error");
    cmd.output().unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

fn corpus(dir: &Path, groups: &[glimpse_core::SubmissionGroup]) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    std::fs::write(&path, common::to_json_lines(groups)).unwrap();
    path
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn score_writes_two_files_per_submission() {
    let tmp = tempfile::tempdir().unwrap();
    let input = corpus(tmp.path(), &[common::synthetic_group(0), demo_group()]);
    let out = tmp.path().join("out");
    let o = run("score", &input, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        listing(&out),
        [
            "demo.matrix.tsv",
            "demo.rsa.json",
            "syn000.matrix.tsv",
            "syn000.rsa.json"
        ]
    );
    let rsa = read_json(out.join("demo.rsa.json"));
    assert_eq!(rsa["config_echo"]["iterations"], 2);
    assert_eq!(rsa["cand_ids"].as_array().unwrap().len(), 3);
}

#[test]
fn score_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = corpus(
        tmp.path(),
        &[common::synthetic_group(1), common::synthetic_group(2)],
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run("score", &input, &a, &["--jobs", "1"]).status.success());
    assert!(run("score", &input, &b, &["--jobs", "3"]).status.success());
    for name in listing(&a) {
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn unreadable_input_fails_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("score", &tmp.path().join("missing.jsonl"), &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    assert!(listing(&out).is_empty());

    let bad = tmp.path().join("bad.jsonl");
    std::fs::write(
        &bad,
        "{\"id\": \"a\", \"submission_id\": \"s\", \"text\": \"Fine text here.\"}\nnot json\n",
    )
    .unwrap();
    let o = run("score", &bad, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(listing(&out).is_empty());
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(
        glimpse(&["score", "--rsa.iterations", "lots"], &[])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(glimpse(&["frobnicate"], &[]).status.code(), Some(1));
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "rsa.rationality_lambda = -1\n").unwrap();
    assert_eq!(
        glimpse(&["demo", "--config"], &[&cfg]).status.code(),
        Some(1)
    );
}

#[test]
fn summarize_marks_the_two_review_example() {
    let tmp = tempfile::tempdir().unwrap();
    let input = corpus(tmp.path(), &[demo_group()]);
    let out = tmp.path().join("out");
    assert!(run("summarize", &input, &out, &[]).status.success());
    let bundle = read_json(out.join("demo.summary.json"));
    let unique = bundle["mds_unique"]["text"].as_str().unwrap();
    assert!(unique.contains("This paper is well-written."));
    assert!(unique.contains("I believe it should be accepted."));

    let html = std::fs::read_to_string(out.join("demo.highlights.html")).unwrap();
    // Every extractive span once: the shared sentence in both reviews, the others once each.
    assert_eq!(html.matches("data-candidate=\"c0\"").count(), 2);
    assert_eq!(html.matches("data-candidate=\"c1\"").count(), 1);
    assert_eq!(html.matches("data-candidate=\"c2\"").count(), 1);
}

#[test]
fn summarize_reuses_matching_rsa_results() {
    let tmp = tempfile::tempdir().unwrap();
    let input = corpus(tmp.path(), &[demo_group()]);
    let (cached, fresh) = (tmp.path().join("cached"), tmp.path().join("fresh"));
    assert!(run("score", &input, &cached, &[]).status.success());
    assert!(run("summarize", &input, &cached, &[]).status.success());
    assert!(run("summarize", &input, &fresh, &[]).status.success());
    assert_eq!(
        std::fs::read(cached.join("demo.summary.json")).unwrap(),
        std::fs::read(fresh.join("demo.summary.json")).unwrap()
    );
    // A stale result (different RSA settings) is ignored, not trusted.
    let stale = tmp.path().join("stale");
    assert!(run("score", &input, &stale, &["--rsa.iterations", "0"])
        .status
        .success());
    assert!(run("summarize", &input, &stale, &[]).status.success());
    assert_eq!(
        std::fs::read(stale.join("demo.summary.json")).unwrap(),
        std::fs::read(fresh.join("demo.summary.json")).unwrap()
    );
}

#[test]
fn variant_flag_only_changes_mds_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let input = corpus(tmp.path(), &[common::synthetic_group(3)]);
    let (sp, un) = (tmp.path().join("speaker"), tmp.path().join("unique"));
    assert!(run("summarize", &input, &sp, &["--variant", "speaker"])
        .status
        .success());
    assert!(run("summarize", &input, &un, &["--variant", "unique"])
        .status
        .success());
    let mut a = read_json(sp.join("syn003.summary.json"));
    let mut b = read_json(un.join("syn003.summary.json"));
    assert!(a.get("mds_speaker").is_some() && a.get("mds_unique").is_none());
    assert!(b.get("mds_unique").is_some() && b.get("mds_speaker").is_none());
    a.as_object_mut().unwrap().remove("mds_speaker");
    b.as_object_mut().unwrap().remove("mds_unique");
    assert_eq!(a, b);
}

#[test]
fn eval_without_gold_has_no_rouge() {
    let tmp = tempfile::tempdir().unwrap();
    let input = corpus(
        tmp.path(),
        &[common::synthetic_group(4), common::synthetic_group(5)],
    );
    let out = tmp.path().join("out");
    let o = run("eval", &input, &out, &[]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("discriminativeness"));
    assert!(!stdout.contains("rouge"));
    let report = read_json(out.join("eval_report.json"));
    assert!(report["aggregate"]["rouge"].as_object().unwrap().is_empty());
    for s in report["per_submission"].as_array().unwrap() {
        assert!(s.get("rouge_unique").is_none() && s.get("rouge_speaker").is_none());
        assert_eq!(s["discriminativeness"], 1.0);
    }
    let csv = std::fs::read_to_string(out.join("eval_report.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",,,"));
}

#[test]
fn eval_with_gold_reports_rouge() {
    let tmp = tempfile::tempdir().unwrap();
    let mut g = demo_group();
    g.gold_summary = Some("The paper is well-written and should be accepted.".into());
    let input = corpus(tmp.path(), &[g]);
    let out = tmp.path().join("out");
    let o = run("eval", &input, &out, &[]);
    assert!(o.status.success());
    let report = read_json(out.join("eval_report.json"));
    let f1 = report["per_submission"][0]["rouge_unique"]["rouge1"]["f1"]
        .as_f64()
        .unwrap();
    assert!(f1 > 0.0 && f1 < 1.0);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("unique.rouge1.f1"));
}

#[test]
fn seeded_random_baseline_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let groups: Vec<_> = (10..30).map(common::synthetic_group).collect();
    let input = corpus(tmp.path(), &groups);
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    assert!(run(
        "eval",
        &input,
        &dirs[0],
        &["--random-baseline", "--seed", "7"]
    )
    .status
    .success());
    assert!(run(
        "eval",
        &input,
        &dirs[1],
        &["--random-baseline", "--seed", "7", "--jobs", "2"]
    )
    .status
    .success());
    assert!(run(
        "eval",
        &input,
        &dirs[2],
        &["--random-baseline", "--seed", "8"]
    )
    .status
    .success());
    let report = |d: &PathBuf| std::fs::read(d.join("eval_report.json")).unwrap();
    assert_eq!(report(&dirs[0]), report(&dirs[1]));
    assert_ne!(report(&dirs[0]), report(&dirs[2]));
    let mean = read_json(dirs[0].join("eval_report.json"))["aggregate"]["discriminativeness"]
        ["mean"]
        .as_f64()
        .unwrap();
    assert!(
        mean < 0.6,
        "random baseline should be far below the speaker: {mean}"
    );
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let input = corpus(tmp.path(), &[demo_group()]);
    let out = tmp.path().join("out");
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[input]\npath = {:?}\n[output]\ndir = {:?}\n[rsa]\niterations = 4\nrecord_trace = true\n",
            input.to_str().unwrap(),
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    assert!(
        glimpse(&["score", "--rsa.iterations", "1", "--config"], &[&cfg])
            .status
            .success()
    );
    let rsa = read_json(out.join("demo.rsa.json"));
    assert_eq!(rsa["config_echo"]["iterations"], 1);
    assert_eq!(rsa["trace"].as_array().unwrap().len(), 2);
}

#[test]
fn demo_prints_summaries() {
    let o = glimpse(&["demo"], &[]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("I believe it should be accepted."));
    assert!(text.contains("review-2"));
}

#[test]
fn external_matrix_is_consumed() {
    let tmp = tempfile::tempdir().unwrap();
    let input = corpus(tmp.path(), &[demo_group()]);
    let scored = tmp.path().join("scored");
    assert!(run("score", &input, &scored, &[]).status.success());
    let out = tmp.path().join("out");
    let o = run(
        "score",
        &input,
        &out,
        &[
            "--scorer.kind",
            "external",
            "--scorer.matrix_dir",
            scored.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(scored.join("demo.rsa.json")).unwrap(),
        std::fs::read(out.join("demo.rsa.json")).unwrap()
    );
}

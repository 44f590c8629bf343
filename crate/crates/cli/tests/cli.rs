use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_domsum"))
}

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/toy")
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    let text = format!(
        "corpus = {:?}\noutput_dir = \"out\"\nseed = 3\nmethods = [\"domsum\", \"longest\"]\n\
         {extra}\n[[models]]\nkind = \"LocalLDA\"\nnum_topics = 5\n\n\
         [model_defaults]\niterations = 40\nburn_in = 20\nthin = 5\n",
        toy_dir()
    );
    fs::write(&path, text).unwrap();
    path
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn run_writes_two_reports_and_a_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = bin()
        .args(["--log-level", "warn", "run", "-c"])
        .arg(&cfg)
        .output()
        .unwrap();
    ok(&out);
    let dir = tmp.path().join("out");
    let reports: Vec<_> = fs::read_dir(dir.join("reports")).unwrap().collect();
    assert_eq!(reports.len(), 2);
    assert!(dir.join("comparison.csv").is_file());
    let md = fs::read_to_string(dir.join("comparison.md")).unwrap();
    assert!(md.contains("Longest DA"));
    assert!(md.contains("LocalLDA K=5 domsum"));
}

#[test]
fn output_dir_and_seed_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let other = tmp.path().join("elsewhere");
    let out = bin()
        .args(["run", "-c"])
        .arg(&cfg)
        .arg("-o")
        .arg(&other)
        .args(["--seed", "11"])
        .output()
        .unwrap();
    ok(&out);
    let manifest = fs::read_to_string(other.join("manifest.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(json["config"]["seed"], 11);
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn validate_lists_every_problem_and_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(
        &path,
        "corpus = \"/no/such/dir\"\nmethods = [\"foo\"]\n[[models]]\nkind = \"LDA\"\nnum_topics = 0\n",
    )
    .unwrap();
    let out = bin().args(["validate", "-c"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("does not exist"), "{err}");
    assert!(err.contains("\"foo\""), "{err}");
    assert!(err.contains("num_topics must be ≥ 1"), "{err}");
}

#[test]
fn validate_accepts_good_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = bin().args(["validate", "-c"]).arg(&cfg).output().unwrap();
    ok(&out);
}

#[test]
fn train_caches_posteriors_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = bin().args(["train", "-c"]).arg(&cfg).output().unwrap();
    ok(&out);
    let dir = tmp.path().join("out");
    assert_eq!(fs::read_dir(dir.join("posteriors")).unwrap().count(), 1);
    assert!(!dir.join("reports").exists());
}

#[test]
fn score_rates_a_perfect_summary_at_one() {
    let tmp = tempfile::tempdir().unwrap();
    let summaries = tmp.path().join("gold.jsonl");
    fs::write(
        &summaries,
        "{\"decision_id\":\"b4\",\"tokens\":[\"remote\",\"use\",\"regular\",\"chip\"]}\n",
    )
    .unwrap();
    let out = bin()
        .arg("score")
        .arg("--summaries")
        .arg(&summaries)
        .arg("--decisions")
        .arg(toy_dir().join("decisions.jsonl"))
        .arg("-o")
        .arg(tmp.path().join("scores"))
        .output()
        .unwrap();
    ok(&out);
    let csv = fs::read_to_string(tmp.path().join("scores/gold.csv")).unwrap();
    assert!(csv.contains("b4,R1,1.000000,1.000000,1.000000"), "{csv}");
}

#[test]
fn unknown_decision_in_score_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let summaries = tmp.path().join("s.jsonl");
    fs::write(&summaries, "{\"decision_id\":\"zz\",\"tokens\":[]}\n").unwrap();
    let out = bin()
        .arg("score")
        .arg("--summaries")
        .arg(&summaries)
        .arg("--decisions")
        .arg(toy_dir().join("decisions.jsonl"))
        .arg("-o")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("zz"));
}

#[test]
fn failed_stage_is_named_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    fs::write(corpus.join("m.jsonl"), "{not json\n").unwrap();
    let cfg = tmp.path().join("exp.toml");
    fs::write(
        &cfg,
        format!("corpus = {corpus:?}\noutput_dir = \"out\"\nmethods = [\"longest\"]\n"),
    )
    .unwrap();
    let out = bin().args(["run", "-c"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let manifest = fs::read_to_string(tmp.path().join("out/manifest.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(json["status"], "FAILED");
    assert_eq!(json["failed_stage"], "load_corpus");
}

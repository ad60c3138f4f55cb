mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use common::BIN;
use logicclip_core::encoder::{load_model, StepLog};
use logicclip_core::eval::EvalReport;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = run(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_line(out: &Output) -> String {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().unwrap_or_default();
    let v: Value = serde_json::from_str(last).unwrap_or_else(|_| panic!("not JSON: {stderr}"));
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn synth_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--scenes", "120", "--seed", "7", "--out", "a.jsonl"], d);
    ok(&["synth", "--scenes", "120", "--seed", "7", "--out", "b.jsonl", "--sequential"], d);
    ok(&["synth", "--scenes", "120", "--seed", "8", "--out", "c.jsonl"], d);
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_ne!(read("a.jsonl"), read("c.jsonl"));
    assert_eq!(read("a.jsonl.manifest.json"), read("b.jsonl.manifest.json"));
}

#[test]
fn variant3_trains_with_only_the_contrastive_term() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--scenes", "96", "--out", "c.jsonl"], d);
    let summary: Value =
        serde_json::from_str(&ok(&["train", "--corpus", "c.jsonl", "--preset", "variant3", "--epochs", "1", "--checkpoint", "m.ckpt"], d))
            .unwrap();
    // 96 records, batch 64: one full batch and one partial
    assert_eq!(summary["steps"], 2);
    let (_, config) = load_model(&d.join("m.ckpt")).unwrap();
    assert_eq!((config.weights.beta, config.weights.gamma), (0.0, 0.0));
    assert_eq!(config.weights.alpha, 4.0);
    let log = std::fs::read_to_string(d.join("m.ckpt.log.jsonl")).unwrap();
    for line in log.lines() {
        let s: StepLog = serde_json::from_str(line).unwrap();
        assert_eq!(s.l_total, 4.0 * s.l_clip + 0.0 * s.l_mc + 0.0 * s.l_logic);
        assert!(s.l_mc > 0.0 && s.l_logic > 0.0);
    }
}

#[test]
fn eval_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--scenes", "80", "--out", "c.jsonl"], d);
    ok(&["train", "--corpus", "c.jsonl", "--epochs", "1", "--checkpoint", "m.ckpt"], d);
    let table = ok(&["eval", "--checkpoint", "m.ckpt", "--corpus", "c.jsonl", "--out", "r.json", "--jsonl", "r.jsonl"], d);
    assert!(table.contains("MCQ"));
    let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report.records, 80);
    assert_eq!(ok(&["report", "r.json"], d), table);
    let jsonl = ok(&["report", "r.json", "--format", "jsonl"], d);
    assert_eq!(jsonl, std::fs::read_to_string(d.join("r.jsonl")).unwrap());
}

#[test]
fn missing_checkpoint_exits_1_with_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["synth", "--scenes", "10", "--out", "c.jsonl"], tmp.path());
    let out = run(&["eval", "--checkpoint", "missing", "--corpus", "c.jsonl"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out).contains("checkpoint not found"));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--out", "x.jsonl", "--bogus"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(run(&["frobnicate"], tmp.path()).status.code(), Some(2));
}

#[test]
fn bad_preset_and_bad_config_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--scenes", "10", "--out", "c.jsonl"], d);
    let out = run(&["train", "--corpus", "c.jsonl", "--preset", "variant7", "--checkpoint", "m"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out).contains("unknown preset"));
    std::fs::write(d.join("bad.toml"), "[synth]\nscenes = \"many\"\n").unwrap();
    let out = run(&["--config", "bad.toml", "synth", "--out", "x.jsonl"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out).contains("invalid config"));
}

#[test]
fn parse_then_forge_rule_based() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let captions = [
        r#"{"image_ref": "img/1.jpg", "caption": "A dog is running on the grass, but the cat is sleeping."}"#,
        r#"{"image_ref": "img/2.jpg", "caption": "A sand castle on the beach."}"#,
        "not json",
        r#"{"image_ref": "img/3.jpg", "caption": "If it rains, the children stay inside."}"#,
    ];
    std::fs::write(d.join("captions.jsonl"), captions.join("\n")).unwrap();
    let out = run(&["parse", "--input", "captions.jsonl", "--out", "kept.jsonl"], d);
    assert!(out.status.success());
    let summary: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).lines().last().unwrap()).unwrap();
    assert_eq!((summary["kept"].as_u64(), summary["no_logic"].as_u64(), summary["malformed"].as_u64()), (Some(2), Some(1), Some(1)));
    let kept = std::fs::read_to_string(d.join("kept.jsonl")).unwrap();
    assert!(kept.lines().next().unwrap().contains("contrast"));

    let printed = ok(&["forge", "--input", "kept.jsonl", "--out", "p.jsonl", "--store", "review"], d);
    let summary: Value = serde_json::from_str(&printed).unwrap();
    assert_eq!((summary["proposals"].as_u64(), summary["failed"].as_u64(), summary["added_to_store"].as_u64()), (Some(2), Some(0), Some(2)));
    let proposals: Vec<Value> =
        std::fs::read_to_string(d.join("p.jsonl")).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(proposals[0]["image_ref"], "img/1.jpg");
    assert_eq!(proposals[0]["backend"], "rule-based");
    assert_eq!(proposals[0]["candidates"].as_array().unwrap().len(), 3);
    ok(&["forge", "--input", "kept.jsonl", "--out", "q.jsonl"], d);
    let again: Vec<Value> =
        std::fs::read_to_string(d.join("q.jsonl")).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    for (a, b) in proposals.iter().zip(&again) {
        assert_eq!(a["candidates"], b["candidates"]);
    }
}

#[test]
fn forge_reports_unset_backend_secret() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--scenes", "5", "--out", "c.jsonl"], d);
    std::fs::write(
        d.join("run.toml"),
        "[[forge.backends]]\nname = \"x\"\nendpoint = \"http://127.0.0.1:9/v1/chat/completions\"\nmodel = \"m\"\napi_key_env = \"LOGICCLIP_TEST_UNSET_KEY\"\n",
    )
    .unwrap();
    let out = run(&["--config", "run.toml", "forge", "--input", "c.jsonl", "--out", "p.jsonl"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out).contains("LOGICCLIP_TEST_UNSET_KEY"));
}

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use xlchat_core::corpus::{write_candidates, write_chats, write_examples};
use xlchat_core::jsonl::write_jsonl;
use xlchat_core::testkit::{coherence_ratings, planted_corpus, reported_predictions, sentinel_corpus};

fn xlchat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlchat"))
        .args(args)
        .env("XLCHAT_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = xlchat(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let last = stdout.lines().last().expect("summary line");
    serde_json::from_str(last).expect("summary is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }
    fn join(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

#[test]
fn flags_and_exit_codes() {
    let out = xlchat(&["evaluate", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(xlchat(&["--help"]).status.code(), Some(0));
    assert_eq!(xlchat(&["--version"]).status.code(), Some(0));
    assert_eq!(xlchat(&[]).status.code(), Some(1));

    let d = Dir::new();
    let out = d.join("report.json");
    let missing = xlchat(&["evaluate", "--examples", p(&d.join("nope.jsonl")), "--predictions", "x", "--out", p(&out)]);
    assert_eq!(missing.status.code(), Some(2));

    std::fs::write(d.join("bad.jsonl"), "{not json}\n").unwrap();
    let malformed = xlchat(&["build-dataset", "--chats", p(&d.join("bad.jsonl")), "--candidates", "x", "--out", p(&out)]);
    assert_eq!(malformed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains(":1:"));

    let bad_rule = xlchat(&["aggregate-labels", "--chats", "a", "--candidates", "b", "--ratings", "c", "--out", "d", "--rule", "vote"]);
    assert_eq!(bad_rule.status.code(), Some(1));
    assert!(!out.exists(), "no output on failure");
}

#[test]
fn filter_chats_selects_top_200_deterministically() {
    let d = Dir::new();
    let ratings = d.join("coherence_ratings.jsonl");
    write_jsonl(&ratings, &coherence_ratings(1500, 10, 4)).unwrap();
    let (a, b) = (d.join("a.json"), d.join("b.json"));
    let s = ok(&["filter-chats", "--ratings", p(&ratings), "--out", p(&a), "--top", "200", "--min-coherent", "7"]);
    assert_eq!(s["selected"], 200);
    assert_eq!(s["shortfall"], 0);
    ok(&["filter-chats", "--ratings", p(&ratings), "--out", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn labeling_pipeline_on_planted_corpus() {
    let d = Dir::new();
    let corpus = planted_corpus(8);
    let (chats, cands, ratings) = (d.join("chats.jsonl"), d.join("candidates.jsonl"), d.join("ratings.jsonl"));
    write_chats(&chats, &corpus.chats).unwrap();
    let unlabeled: Vec<_> = corpus
        .candidates
        .iter()
        .cloned()
        .map(|mut c| {
            c.verdict = None;
            c
        })
        .collect();
    write_candidates(&cands, &unlabeled).unwrap();
    xlchat_core::labeling::write_ratings(&ratings, &corpus.ratings).unwrap();

    let (labeled, stats, examples) = (d.join("labeled.jsonl"), d.join("stats.json"), d.join("examples.jsonl"));
    let s = ok(&[
        "aggregate-labels", "--chats", p(&chats), "--candidates", p(&cands), "--ratings", p(&ratings),
        "--out", p(&labeled), "--stats", p(&stats),
    ]);
    assert_eq!(s["deleted"], 159);
    let stats: Value = serde_json::from_slice(&std::fs::read(&stats).unwrap()).unwrap();
    assert_eq!(stats["deleted_total"], 159);

    let s = ok(&["build-dataset", "--chats", p(&chats), "--candidates", p(&labeled), "--out", p(&examples)]);
    assert_eq!(s["examples"], 8022 + 7191);

    let again = d.join("examples2.jsonl");
    ok(&["build-dataset", "--chats", p(&chats), "--candidates", p(&labeled), "--out", p(&again), "--ctx-policy", "first-correct"]);
    assert_eq!(std::fs::read(&examples).unwrap(), std::fs::read(&again).unwrap());

    let report = d.join("bleu.json");
    let s = ok(&["report-bleu", "--examples", p(&examples), "--out", p(&report), "--threshold", "50"]);
    assert!(s["cases"].as_u64().unwrap() > 0);
}

#[test]
fn translate_corpus_with_mock_backends() {
    let d = Dir::new();
    let corpus = planted_corpus(3);
    let chats = d.join("chats.jsonl");
    write_chats(&chats, &corpus.chats[..4]).unwrap();
    let config = d.join("backends.toml");
    std::fs::write(
        &config,
        "[backend.low]\nkind = \"mock\"\nquality = \"mt_low\"\n\n[backend.high]\nkind = \"mock\"\nquality = \"mt_high\"\n[backend.high.degradation]\ndrop_prob = 0.05\nswap_prob = 0.0\n",
    )
    .unwrap();
    let (a, b) = (d.join("a.jsonl"), d.join("b.jsonl"));
    let s = ok(&["translate-corpus", "--chats", p(&chats), "--config", p(&config), "--out", p(&a), "--seed", "9"]);
    let utterances: usize = corpus.chats[..4].iter().map(|c| c.utterances.len()).sum();
    assert_eq!(s["candidates"], 2 * utterances);
    ok(&["translate-corpus", "--chats", p(&chats), "--config", p(&config), "--out", p(&b), "--seed", "9"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    std::fs::write(
        &config,
        "[backend.remote]\nkind = \"remote\"\nquality = \"mt_high\"\nendpoint = \"http://127.0.0.1:9/translate\"\nretry_count = 0\ntimeout = 2.0\n",
    )
    .unwrap();
    let c = d.join("c.jsonl");
    let out = xlchat(&["translate-corpus", "--chats", p(&chats), "--config", p(&config), "--out", p(&c)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!c.exists());
}

#[test]
fn evaluate_reported_fixture() {
    let d = Dir::new();
    let (examples, preds) = reported_predictions(2);
    let (e, pr, out, text) = (d.join("examples.jsonl"), d.join("predictions.jsonl"), d.join("eval_report.json"), d.join("eval_report.txt"));
    write_examples(&e, &examples).unwrap();
    write_jsonl(&pr, &preds).unwrap();
    let s = ok(&["evaluate", "--examples", p(&e), "--predictions", p(&pr), "--out", p(&out), "--text", p(&text)]);
    assert_eq!(s["directions"]["ja-en"]["f1"], 73.3);
    assert_eq!(s["directions"]["en-ja"]["f1"], 75.03);
    assert!(std::fs::read_to_string(&text).unwrap().contains("73.30"));
}

#[test]
fn train_then_evaluate_with_model() {
    let d = Dir::new();
    let data = sentinel_corpus(160, 4);
    let (train, test) = (d.join("train.jsonl"), d.join("test.jsonl"));
    write_examples(&train, &data[..128]).unwrap();
    write_examples(&test, &data[128..]).unwrap();
    let cfg = d.join("detector.toml");
    std::fs::write(&cfg, "[detector]\nmax_length = 64\nbatch_size = 16\n").unwrap();
    let (m1, m2) = (d.join("model1"), d.join("model2"));
    let s = ok(&["train-detector", "--examples", p(&train), "--out", p(&m1), "--config", p(&cfg), "--seed", "3"]);
    assert_eq!(s["examples"], 128);
    assert_eq!(s["steps"], 8);
    ok(&["train-detector", "--examples", p(&train), "--out", p(&m2), "--config", p(&cfg), "--seed", "3"]);
    for f in ["encoder.safetensors", "head.safetensors", "manifest.json", "vocab.txt", "config.json"] {
        assert_eq!(std::fs::read(m1.join(f)).unwrap(), std::fs::read(m2.join(f)).unwrap(), "{f}");
    }
    // retraining into the same directory replaces the previous model
    ok(&["train-detector", "--examples", p(&train), "--out", p(&m1), "--config", p(&cfg), "--seed", "3"]);

    let (out, preds) = (d.join("report.json"), d.join("predictions.jsonl"));
    let s = ok(&["evaluate", "--examples", p(&test), "--model", p(&m1), "--out", p(&out), "--predictions-out", p(&preds)]);
    assert_eq!(s["directions"]["ja-en"]["examples"].as_u64().unwrap() + s["directions"]["en-ja"]["examples"].as_u64().unwrap_or(0), 32);
    assert_eq!(std::fs::read_to_string(&preds).unwrap().lines().count(), 32);

    let bad_cfg = d.join("bad.toml");
    std::fs::write(&bad_cfg, "max_lr = -1.0\n").unwrap();
    let out = xlchat(&["train-detector", "--examples", p(&train), "--out", p(&d.join("m3")), "--config", p(&bad_cfg)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn serve_listens_and_accepts_sessions() {
    let d = Dir::new();
    let config = d.join("service.toml");
    std::fs::write(
        &config,
        "[server]\nport = 0\n[storage]\ndir = \"state\"\n[backend.mock]\nkind = \"mock\"\nquality = \"mt_high\"\n",
    )
    .unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_xlchat"))
        .args(["serve", "--config", p(&config)])
        .env("XLCHAT_LOG", "warn")
        .env_remove(xlchat_service::STORAGE_DIR_ENV)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let info: Value = serde_json::from_str(&line).unwrap();
    let addr = info["listening"].as_str().unwrap().to_string();

    let client = reqwest::blocking::Client::new();
    let r = client
        .post(format!("http://{addr}/sessions"))
        .json(&serde_json::json!({"participants": [
            {"display_name": "A", "lang": "en"}, {"display_name": "B", "lang": "ja"}
        ]}))
        .send()
        .unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(r.status(), 201);
    assert_eq!(std::fs::read_dir(d.join("state/sessions")).unwrap().count(), 1);
}

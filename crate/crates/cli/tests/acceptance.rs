//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlchat_core::coherence::{score_chats, select_top};
use xlchat_core::detector::{
    assemble_input, softmax2, train, DetectorConfig, DetectorError, DetectorModel, SpecialIds, Tokenize,
    SPECIAL_TOKENS,
};
use xlchat_core::evaluation::{
    bleu_vs_label_report, evaluate, sentence_bleu, BleuCase, BleuConfig, MetricsReport,
};
use xlchat_core::labeling::{aggregate_verdicts, apply_deletion_rule, apply_verdicts, compute_stats, AggregationRule};
use xlchat_core::testkit::{
    coherence_ratings, planted_corpus, random_quad, reported_matrix, reported_predictions, sentinel_corpus,
    REPORTED_MATRICES,
};
use xlchat_core::{build_quads, ChatQuad, CtxPolicy, Direction, Label, LabeledExample, Origin};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol + 1e-9
}

// ---------------------------------------------------------------- metrics

/// Reported percentages per direction: P, R, F, accuracy, majority, minority.
const REPORTED: [(Direction, [f64; 6]); 2] = [
    (Direction::JaEn, [71.10, 75.65, 73.30, 76.27, 56.94, 43.06]),
    (Direction::EnJa, [69.75, 81.18, 75.03, 77.06, 57.54, 42.46]),
];

fn metrics_oracle() -> Outcome {
    let (examples, preds) = reported_predictions(1);
    let evaluated = evaluate(&examples, &preds).map_err(|e| e.to_string())?;
    for (dir, want) in REPORTED {
        let per_origin = REPORTED_MATRICES
            .iter()
            .find(|(d, _)| *d == dir)
            .map(|(_, rows)| rows.iter().map(|(o, c)| (*o, reported_matrix(*c))).collect::<BTreeMap<_, _>>())
            .unwrap();
        let summed = MetricsReport::from_per_origin(per_origin.clone()).map_err(|e| e.to_string())?;
        ensure!(summed == evaluated.directions[&dir], "{dir}: summed matrices differ from per-example evaluation");

        // independent recount in floating point
        let (mut tp, mut fp, mut fn_, mut tn) = (0.0, 0.0, 0.0, 0.0);
        for m in per_origin.values() {
            tp += m.tp as f64;
            fp += m.fp as f64;
            fn_ += m.fn_ as f64;
            tn += m.tn as f64;
        }
        let n = tp + fp + fn_ + tn;
        let p = 100.0 * tp / (tp + fp);
        let r = 100.0 * tp / (tp + fn_);
        let oracle = [
            p,
            r,
            2.0 * p * r / (p + r),
            100.0 * (tp + tn) / n,
            100.0 * (tn + fp).max(tp + fn_) / n,
            100.0 * (tn + fp).min(tp + fn_) / n,
        ];
        let got = [
            summed.precision,
            summed.recall,
            summed.f1,
            summed.accuracy,
            summed.baselines.majority,
            summed.baselines.minority,
        ];
        let names = ["P", "R", "F", "accuracy", "majority", "minority"];
        for i in 0..6 {
            ensure!(
                close(got[i].as_f64(), want[i], 0.01),
                "{dir} {}: got {} want {:.2}",
                names[i],
                got[i],
                want[i]
            );
            ensure!(
                close(got[i].as_f64(), oracle[i], 0.005),
                "{dir} {}: got {} oracle {:.4}",
                names[i],
                got[i],
                oracle[i]
            );
        }
    }
    Ok("P/R/F, accuracy and baselines match for ja-en and en-ja".into())
}

// ---------------------------------------------------------------- dataset

fn dataset_closure() -> Outcome {
    let corpus = planted_corpus(2024);
    let unlabeled: Vec<_> = corpus
        .candidates
        .iter()
        .cloned()
        .map(|mut c| {
            c.verdict = None;
            c
        })
        .collect();
    let verdicts = aggregate_verdicts(&corpus.ratings, AggregationRule::Majority).map_err(|e| e.to_string())?;
    let labeled = apply_verdicts(&unlabeled, &verdicts).map_err(|e| e.to_string())?;
    let en_utts: usize = corpus
        .chats
        .iter()
        .filter(|c| c.direction() == Some(Direction::EnJa))
        .map(|c| c.utterances.len())
        .sum();
    let ja_utts: usize = corpus
        .chats
        .iter()
        .filter(|c| c.direction() == Some(Direction::JaEn))
        .map(|c| c.utterances.len())
        .sum();
    ensure!(corpus.chats.len() == 450, "{} chats", corpus.chats.len());
    ensure!((en_utts, ja_utts) == (2940, 2740), "utterances en {en_utts} ja {ja_utts}");

    let deletion = apply_deletion_rule(&labeled);
    ensure!(deletion.deleted.len() == 159, "deleted {}", deletion.deleted.len());
    let examples = build_quads(&corpus.chats, &labeled, &CtxPolicy::default()).map_err(|e| e.to_string())?;
    let count = |d| examples.iter().filter(|e: &&LabeledExample| e.quad.direction == d).count();
    let (en, ja) = (count(Direction::EnJa), count(Direction::JaEn));
    ensure!(en == 8022, "en examples {en}");
    ensure!(ja == 7191, "ja examples {ja}");

    let stats = compute_stats(&labeled, &corpus.chats);
    ensure!(stats.deleted_total == 159, "stats deleted {}", stats.deleted_total);
    let per_dir = (
        stats.directions[&Direction::EnJa].deleted_count,
        stats.directions[&Direction::JaEn].deleted_count,
    );
    ensure!(per_dir == (66, 93), "deleted per direction {per_dir:?}");
    for (origin, want) in [(Origin::MtLow, "89.58"), (Origin::MtHigh, "30.25"), (Origin::Human, "10.51")] {
        let o = &stats.origins[&origin];
        let rate = o.bad_rate.to_string();
        ensure!(rate == want, "{origin} bad rate {rate}");
        // oracle: half-up rounding of the raw ratio
        let oracle = (o.bad as f64 * 10_000.0 / o.total as f64 + 0.5).floor() / 100.0;
        ensure!(close(o.bad_rate.as_f64(), oracle, 0.0), "{origin}: {rate} vs oracle {oracle}");
    }
    Ok(format!("deleted=159 (66+93), en={en}, ja={ja}, bad rates 89.58/30.25/10.51"))
}

// ---------------------------------------------------------------- coherence

fn coherence_filter() -> Outcome {
    let ratings = coherence_ratings(1500, 10, 77);
    let scores = score_chats(&ratings).map_err(|e| e.to_string())?;
    ensure!(scores.len() == 1500, "{} scored chats", scores.len());
    let selection = select_top(&scores, 200, 7);

    // oracle: known vote counts, brute-force ranking
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &ratings {
        *votes.entry(r.chat_id.as_str()).or_default() += r.coherent as usize;
    }
    let mut ranked: Vec<(&str, usize)> = votes.iter().map(|(k, v)| (*k, *v)).filter(|(_, v)| *v >= 7).collect();
    ranked.sort_by_key(|(id, v)| (std::cmp::Reverse(*v), *id));
    ensure!(ranked.len() >= 200, "only {} chats qualify", ranked.len());
    let want: Vec<String> = ranked[..200].iter().map(|(id, _)| id.to_string()).collect();
    ensure!(selection.chat_ids == want, "selection differs from brute-force top 200");
    ensure!(selection.shortfall == 0, "shortfall {}", selection.shortfall);
    ensure!(
        selection.chat_ids.iter().all(|id| votes[id.as_str()] >= 7),
        "a selected chat has fewer than 7 votes"
    );

    let mut shuffled = ratings.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let again = select_top(&score_chats(&shuffled).map_err(|e| e.to_string())?, 200, 7);
    ensure!(again == selection, "selection depends on input order");
    let cutoff = votes[want[199].as_str()];
    Ok(format!("200 of 1500 selected, vote cutoff {cutoff}, order-independent"))
}

// ---------------------------------------------------------------- detector

/// One token per whitespace word, numbered by position.
struct Counting;

impl Tokenize for Counting {
    fn encode(&self, text: &str) -> Vec<u32> {
        text.split_whitespace().enumerate().map(|(i, _)| 100 + i as u32).collect()
    }

    fn special_ids(&self) -> SpecialIds {
        SpecialIds {
            pad: 0,
            unk: 1,
            cls: 2,
            sep: 3,
        }
    }
}

fn words(n: usize) -> String {
    (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
}

fn check_assembly(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..2000 {
        let lens: [usize; 4] = std::array::from_fn(|_| rng.random_range(1..60));
        let max_length = rng.random_range(SPECIAL_TOKENS + 1..200);
        let quad = ChatQuad {
            chat_id: "c".into(),
            index: case,
            direction: Direction::EnJa,
            origin: Origin::Human,
            ctx_src: words(lens[0]),
            ctx_tgt: words(lens[1]),
            resp_src: words(lens[2]),
            resp_tgt: words(lens[3]),
        };
        let result = assemble_input(&quad, &Counting, max_length);
        if lens[3] + SPECIAL_TOKENS > max_length {
            ensure!(
                matches!(result, Err(DetectorError::InputTooLong { .. })),
                "case {case}: overlong response accepted"
            );
            continue;
        }
        let input = result.map_err(|e| format!("case {case}: {e}"))?;
        // oracle: left truncation in field order until the budget fits
        let mut excess = (lens.iter().sum::<usize>() + SPECIAL_TOKENS).saturating_sub(max_length);
        let mut cut = [0usize; 4];
        for i in 0..3 {
            cut[i] = excess.min(lens[i]);
            excess -= cut[i];
        }
        ensure!(input.truncated == cut, "case {case}: truncated {:?} want {cut:?}", input.truncated);
        ensure!(input.len() <= max_length, "case {case}: length {}", input.len());
        ensure!(input.token_ids[0] == 2, "case {case}: first token is not the classification token");
        let mut pos = 1;
        for (i, span) in input.spans.iter().enumerate() {
            ensure!(span.start == pos, "case {case}: span {i} starts at {} want {pos}", span.start);
            ensure!(span.len() == lens[i] - cut[i], "case {case}: span {i} length");
            let want: Vec<u32> = (cut[i]..lens[i]).map(|k| 100 + k as u32).collect();
            ensure!(input.token_ids[span.clone()] == want[..], "case {case}: span {i} keeps the wrong tokens");
            ensure!(input.token_ids[span.end] == 3, "case {case}: no separator after span {i}");
            let ty = if i < 2 { 0 } else { 1 };
            ensure!(
                input.type_ids[span.start..=span.end].iter().all(|t| *t == ty),
                "case {case}: span {i} segment ids"
            );
            pos = span.end + 1;
        }
        ensure!(pos == input.len(), "case {case}: trailing tokens");
    }
    Ok(())
}

fn held_out_accuracy(model: &DetectorModel, examples: &[LabeledExample]) -> Result<(f64, Vec<f64>), String> {
    let quads: Vec<_> = examples.iter().map(|e| e.quad.clone()).collect();
    let mut hits = 0;
    let mut probs = Vec::with_capacity(quads.len());
    for (p, e) in model.predict_batch(&quads).into_iter().zip(examples) {
        let p = p.map_err(|e| e.to_string())?;
        hits += (p.label == e.label) as usize;
        probs.push(p.prob_erroneous);
    }
    Ok((hits as f64 / examples.len() as f64, probs))
}

fn detector_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);

    // (a) normalization on random logits and on random quads
    for _ in 0..1000 {
        let l = [rng.random_range(-50.0f32..50.0), rng.random_range(-50.0f32..50.0)];
        let [a, b] = softmax2(l);
        ensure!((a + b - 1.0).abs() <= 1e-6, "softmax of {l:?} sums to {}", a + b);
    }
    let data = sentinel_corpus(2000, 11);
    let (train_set, held_out) = data.split_at(1600);
    let cfg = DetectorConfig {
        epochs: 3,
        max_length: 128,
        seed: 7,
        ..DetectorConfig::default()
    };
    let model = train(train_set, &cfg).map_err(|e| e.to_string())?;
    for _ in 0..1000 {
        let q = random_quad(&mut rng, 40);
        let p = xlchat_core::ErrorDetector::predict(&model, &q).map_err(|e| e.to_string())?;
        ensure!(
            (p.prob_erroneous + p.prob_correct - 1.0).abs() <= 1e-6,
            "probabilities sum to {}",
            p.prob_erroneous + p.prob_correct
        );
    }

    // (b)
    check_assembly(&mut rng)?;

    // (c)
    let (acc, probs) = held_out_accuracy(&model, held_out)?;
    let erroneous = held_out.iter().filter(|e| e.label.is_erroneous()).count();
    let majority = erroneous.max(held_out.len() - erroneous) as f64 / held_out.len() as f64;
    ensure!(acc >= 0.95, "held-out accuracy {acc:.4} < 0.95");
    ensure!(acc > majority, "held-out accuracy {acc:.4} <= majority {majority:.4}");

    // (d)
    let again = train(train_set, &cfg).map_err(|e| e.to_string())?;
    let (acc2, probs2) = held_out_accuracy(&again, held_out)?;
    ensure!(acc2 == acc, "retrained accuracy {acc2} != {acc}");
    ensure!(probs2 == probs, "retrained probabilities differ");
    Ok(format!("held-out accuracy {acc:.4} (majority {majority:.4}), reproducible, normalization and assembly hold"))
}

// ---------------------------------------------------------------- BLEU

fn bleu_case(id: usize, hyp: &str, reference: &str, label: Label) -> BleuCase {
    BleuCase {
        chat_id: format!("chat{id}"),
        index: 1,
        origin: Origin::MtHigh,
        direction: Direction::JaEn,
        context: None,
        source: "src".into(),
        hypothesis: hyp.into(),
        reference: reference.into(),
        label: Some(label),
        predicted: Some(label),
    }
}

fn bleu_oracle() -> Outcome {
    let plain = BleuConfig::plain();
    let s = sentence_bleu("I had America as my dinner .", "I had rice as my dinner .", &plain);
    let oracle = 100.0 * ((6.0f64 / 7.0) * (4.0 / 6.0) * (2.0 / 5.0) * (1.0 / 4.0)).powf(0.25);
    ensure!(close(s.score, 48.9, 0.1), "pair scores {:.3}", s.score);
    ensure!(close(s.score, oracle, 1e-9), "pair scores {:.6}, oracle {oracle:.6}", s.score);
    for cfg in [BleuConfig::plain(), BleuConfig::default()] {
        for text in ["I had rice as my dinner .", "ok", "今日は 寿司 を 食べ ました 。"] {
            let id = sentence_bleu(text, text, &cfg).score;
            ensure!(id == 100.0, "identity scores {id} for {text:?}");
        }
    }

    let reference = "we went to the beach on sunday and swam until the sun went down";
    let planted = [
        "we went to the beach on monday and swam until the sun went down",
        "we went to the beach on sunday and ran until the sun went down",
        "we went to the bench on sunday and swam until the sun went down",
    ];
    let mut cases = Vec::new();
    for (i, h) in planted.iter().enumerate() {
        cases.push(bleu_case(i, h, reference, Label::Erroneous));
    }
    for i in 0..20 {
        // erroneous but low overlap, and correct with high overlap
        cases.push(bleu_case(100 + i, "the cat sat quietly", reference, Label::Erroneous));
        cases.push(bleu_case(200 + i, reference, reference, Label::Correct));
    }
    cases.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let cfg = BleuConfig::default();
    let report = bleu_vs_label_report(&cases, &cfg, 70.0);
    let mut got: Vec<&str> = report.entries.iter().map(|e| e.case.chat_id.as_str()).collect();
    got.sort();
    ensure!(got == ["chat0", "chat1", "chat2"], "report lists {got:?}");
    Ok(format!("pair {:.2}, identity 100, 3/3 planted items reported", s.score))
}

// ---------------------------------------------------------------- service

mod service_e2e {
    use super::*;
    use futures::StreamExt;
    use serde_json::{json, Value};
    use xlchat_core::backends::TranslationBackend;
    use xlchat_core::detector::ErrorDetector;
    use xlchat_service::testkit::{ScriptedDetector, TaggingBackend};
    use xlchat_service::{ChatService, MessageStatus, ServerEvent, Store};

    struct Live {
        base: String,
        client: reqwest::Client,
        task: tokio::task::JoinHandle<()>,
    }

    async fn start(dir: &std::path::Path) -> Result<Live, String> {
        let backends: Vec<Arc<dyn TranslationBackend>> = vec![Arc::new(TaggingBackend::default())];
        let detector: Arc<dyn ErrorDetector> = Arc::new(ScriptedDetector::new(&[("I agree.", 0.92)]));
        let store = Store::open(dir).map_err(|e| e.to_string())?;
        let svc = ChatService::new(backends, Some(detector), 0.5, Some(store)).map_err(|e| e.to_string())?;
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let addr = listener.local_addr().map_err(|e| e.to_string())?;
        let task = tokio::spawn(async move {
            let _ = xlchat_service::serve(listener, Arc::new(svc)).await;
        });
        Ok(Live {
            base: format!("http://{addr}"),
            client: reqwest::Client::new(),
            task,
        })
    }

    async fn call(live: &Live, path: &str, token: Option<&str>, body: Value) -> Result<Value, String> {
        let mut req = live.client.post(format!("{}{path}", live.base)).json(&body);
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        let r = req.send().await.map_err(|e| e.to_string())?;
        let status = r.status();
        let v: Value = r.json().await.map_err(|e| e.to_string())?;
        ensure!(status.as_u16() == 201, "POST {path}: {status} {v}");
        Ok(v)
    }

    async fn events(live: &Live, sid: &str, token: &str, n: usize) -> Result<Vec<ServerEvent>, String> {
        let r = live
            .client
            .get(format!("{}/sessions/{sid}/events?from=0", live.base))
            .bearer_auth(token)
            .send()
            .await
            .map_err(|e| e.to_string())?;
        let mut stream = r.bytes_stream();
        let mut buf = String::new();
        let mut out = Vec::new();
        let read = async {
            while out.len() < n {
                let Some(chunk) = stream.next().await else { break };
                let chunk = chunk.map_err(|e| e.to_string())?;
                buf.push_str(&String::from_utf8_lossy(&chunk));
                while let Some(end) = buf.find("\n\n") {
                    let frame: String = buf.drain(..end + 2).collect();
                    if let Some(data) = frame.lines().find_map(|l| l.strip_prefix("data: ")) {
                        out.push(serde_json::from_str(data).map_err(|e| e.to_string())?);
                    }
                }
            }
            Ok::<_, String>(())
        };
        tokio::time::timeout(Duration::from_secs(10), read)
            .await
            .map_err(|_| "event stream timed out".to_string())??;
        Ok(out)
    }

    async fn transcript(live: &Live, sid: &str, token: &str) -> Result<Vec<u8>, String> {
        let r = live
            .client
            .get(format!("{}/sessions/{sid}/transcript", live.base))
            .bearer_auth(token)
            .send()
            .await
            .map_err(|e| e.to_string())?;
        Ok(r.bytes().await.map_err(|e| e.to_string())?.to_vec())
    }

    async fn scenario() -> Outcome {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let live = start(dir.path()).await?;
        let created = call(
            &live,
            "/sessions",
            None,
            json!({"participants": [{"display_name": "Aiko", "lang": "ja"}, {"display_name": "Ben", "lang": "en"}]}),
        )
        .await?;
        let sid = created["session"]["session_id"].as_str().unwrap_or_default().to_string();
        let p1 = created["tokens"]["p1"].as_str().unwrap_or_default().to_string();
        let p2 = created["tokens"]["p2"].as_str().unwrap_or_default().to_string();
        let post = format!("/sessions/{sid}/messages");
        let mut ids = Vec::new();
        for (token, text) in [
            (&p1, "週末は何をしましたか？"),
            (&p2, "I went hiking."),
            (&p1, "山登りは楽しいですね。"),
            (&p2, "I agree."),
        ] {
            let m = call(&live, &post, Some(token), json!({ "text": text })).await?;
            ids.push(m["message_id"].as_str().unwrap_or_default().to_string());
        }
        call(
            &live,
            &format!("/sessions/{sid}/messages/{}/revision", ids[3]),
            Some(&p2),
            json!({ "text": "Yes, hiking is fun." }),
        )
        .await?;
        call(&live, &post, Some(&p1), json!({ "text": "また行きましょう。" })).await?;

        let e1 = events(&live, &sid, &p1, 6).await?;
        let e2 = events(&live, &sid, &p2, 6).await?;
        ensure!(e1.len() == 6 && e2.len() == 6, "event counts {} / {}", e1.len(), e2.len());
        let mut warned = 0;
        for (a, b) in e1.iter().zip(&e2) {
            ensure!(a == b, "participants saw different events at seq {}", a.message.seq);
            let m = &a.message;
            ensure!(
                m.warning == m.prob_erroneous.is_some_and(|p| p >= 0.5),
                "seq {}: warning does not follow the score",
                m.seq
            );
            warned += m.warning as usize;
        }
        let seqs: Vec<u64> = e1.iter().map(|e| e.message.seq).collect();
        ensure!(seqs == [0, 1, 2, 3, 4, 5], "seqs {seqs:?}");
        ensure!(e1[0].message.status == MessageStatus::Unchecked, "first message not unchecked");
        ensure!(warned == 1 && e1[3].message.warning, "expected exactly the scripted warning");
        let rev = &e1[4].message;
        ensure!(
            rev.supersedes.as_deref() == Some(ids[3].as_str()) && rev.status == MessageStatus::Revised,
            "revision chain broken"
        );
        ensure!(rev.sender == e1[3].message.sender, "revision by a different sender");

        let before = transcript(&live, &sid, &p1).await?;
        live.task.abort();
        let restarted = start(dir.path()).await?;
        let after = transcript(&restarted, &sid, &p1).await?;
        restarted.task.abort();
        ensure!(before == after, "transcript changed across restart");
        Ok(format!("6 messages, 1 warning delivered to both sides, transcript {} bytes identical after restart", before.len()))
    }

    pub fn run() -> Outcome {
        tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .map_err(|e| e.to_string())?
            .block_on(scenario())
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 6] = [
        ("metrics oracle", metrics_oracle),
        ("dataset-count closure", dataset_closure),
        ("coherence filter", coherence_filter),
        ("detector desk suite", detector_suite),
        ("BLEU oracle", bleu_oracle),
        ("service end-to-end", service_e2e::run),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};
use xlchat_core::backends::{generate_candidates_routed, load_backends, BackendKind, BackendsFile, TranslationBackend};
use xlchat_core::coherence::{irregular_rater_counts, read_ratings, score_chats, select_top};
use xlchat_core::corpus::{read_candidates, read_chats, read_examples, write_candidates, write_chats, write_examples};
use xlchat_core::detector::train_with_progress;
use xlchat_core::evaluation::{bleu_vs_label_report, cases_from_examples, evaluate, BleuConfig};
use xlchat_core::jsonl::{read_jsonl, write_jsonl};
use xlchat_core::labeling::{self, aggregate_verdicts, apply_deletion_rule, apply_verdicts, compute_stats};
use xlchat_core::{build_quads, DetectorConfig, DetectorModel, PredictionRecord};
use xlchat_service::{ChatService, Settings};

use crate::error::CliError;
use crate::output::{atomic_dir, atomic_file, write_json, write_text};
use crate::{
    AggregateLabels, BuildDataset, Command, Evaluate, FilterChats, ReportBleu, Serve, TrainDetector,
    TranslateCorpus,
};

pub fn execute(command: Command) -> Result<Value, CliError> {
    match command {
        Command::FilterChats(a) => filter_chats(a),
        Command::TranslateCorpus(a) => translate_corpus(a),
        Command::AggregateLabels(a) => aggregate_labels(a),
        Command::BuildDataset(a) => build_dataset(a),
        Command::TrainDetector(a) => train_detector(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::ReportBleu(a) => report_bleu(a),
        Command::Serve(a) => serve(a),
    }
}

fn config_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

fn filter_chats(a: FilterChats) -> Result<Value, CliError> {
    let ratings = read_ratings(&a.ratings)?;
    let scores = score_chats(&ratings)?;
    let irregular = irregular_rater_counts(&scores, a.raters);
    if !irregular.is_empty() {
        tracing::warn!(chats = irregular.len(), expected = a.raters, "chats with an unexpected rater count");
    }
    let selection = select_top(&scores, a.top, a.min_coherent);
    if selection.shortfall > 0 {
        tracing::warn!(shortfall = selection.shortfall, "fewer chats qualified than requested");
    }
    let subset = match &a.chats {
        Some(path) => {
            let chats = read_chats(path)?;
            let by_id: BTreeMap<&str, _> = chats.iter().map(|c| (c.chat_id.as_str(), c)).collect();
            let picked = selection
                .chat_ids
                .iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|c| (*c).clone())
                        .ok_or_else(|| CliError::Validation(format!("selected chat `{id}` is not in {}", path.display())))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(picked)
        }
        None => None,
    };
    write_json(&a.out, &selection)?;
    if let (Some(out), Some(chats)) = (&a.chats_out, &subset) {
        atomic_file(out, |tmp| write_chats(tmp, chats))?;
    }
    Ok(json!({
        "command": "filter-chats",
        "rated": scores.len(),
        "selected": selection.chat_ids.len(),
        "shortfall": selection.shortfall,
        "irregular_rater_counts": irregular.len(),
    }))
}

fn translate_corpus(a: TranslateCorpus) -> Result<Value, CliError> {
    let chats = read_chats(&a.chats)?;
    let mut file = BackendsFile::load(&a.config)?;
    if let Some(seed) = a.seed {
        for cfg in file.backend.values_mut().filter(|c| c.kind == BackendKind::Mock) {
            cfg.seed = seed;
        }
    }
    let backends = load_backends(&file, &a.backends, config_dir(&a.config))?;
    let refs: Vec<&dyn TranslationBackend> = backends.iter().map(|b| b.as_ref()).collect();
    let candidates = generate_candidates_routed(&chats, &refs)?;
    atomic_file(&a.out, |tmp| write_candidates(tmp, &candidates))?;
    Ok(json!({
        "command": "translate-corpus",
        "chats": chats.len(),
        "backends": refs.iter().map(|b| b.info().name.clone()).collect::<Vec<_>>(),
        "candidates": candidates.len(),
    }))
}

fn aggregate_labels(a: AggregateLabels) -> Result<Value, CliError> {
    let chats = read_chats(&a.chats)?;
    let candidates = read_candidates(&a.candidates)?;
    let ratings = labeling::read_ratings(&a.ratings)?;
    let verdicts = aggregate_verdicts(&ratings, a.rule)?;
    let labeled = apply_verdicts(&candidates, &verdicts)?;
    let deletion = apply_deletion_rule(&labeled);
    let stats = compute_stats(&labeled, &chats);
    atomic_file(&a.out, |tmp| write_candidates(tmp, &labeled))?;
    if let Some(path) = &a.stats {
        write_json(path, &stats)?;
    }
    eprint!("{}", stats.render_table());
    let erroneous = labeled.iter().filter(|c| c.verdict.is_some_and(|v| v.is_erroneous())).count();
    Ok(json!({
        "command": "aggregate-labels",
        "candidates": labeled.len(),
        "erroneous": erroneous,
        "deleted": deletion.deleted.len(),
    }))
}

fn build_dataset(a: BuildDataset) -> Result<Value, CliError> {
    let chats = read_chats(&a.chats)?;
    let candidates = read_candidates(&a.candidates)?;
    let examples = build_quads(&chats, &candidates, &a.ctx_policy)?;
    atomic_file(&a.out, |tmp| write_examples(tmp, &examples))?;
    let erroneous = examples.iter().filter(|e| e.label.is_erroneous()).count();
    Ok(json!({
        "command": "build-dataset",
        "examples": examples.len(),
        "erroneous": erroneous,
        "correct": examples.len() - erroneous,
    }))
}

fn train_detector(a: TrainDetector) -> Result<Value, CliError> {
    let mut cfg = match &a.config {
        Some(p) => DetectorConfig::load(p)?,
        None => DetectorConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(epochs) = a.epochs {
        cfg.epochs = epochs;
    }
    cfg.validate()?;
    let examples = read_examples(&a.examples)?;
    let model = train_with_progress(&examples, &cfg, &mut |s| {
        tracing::info!(epoch = s.epoch, steps = s.steps, mean_loss = s.mean_loss, "epoch done");
    })?;
    atomic_dir(&a.out, "manifest.json", |tmp| model.save(tmp))?;
    let manifest = model.manifest().expect("trained models carry a manifest");
    Ok(json!({
        "command": "train-detector",
        "examples": manifest.examples,
        "steps": manifest.steps,
        "final_loss": manifest.epochs.last().map(|e| e.mean_loss),
        "dataset_sha256": manifest.dataset_sha256,
    }))
}

fn predict_all(model: &DetectorModel, examples: &[xlchat_core::LabeledExample]) -> Result<Vec<PredictionRecord>, CliError> {
    let quads: Vec<_> = examples.iter().map(|e| e.quad.clone()).collect();
    model
        .predict_batch(&quads)
        .into_iter()
        .zip(&quads)
        .map(|(p, q)| Ok(PredictionRecord::new(q, &p?)))
        .collect()
}

fn evaluate_cmd(a: Evaluate) -> Result<Value, CliError> {
    let examples = read_examples(&a.examples)?;
    let predictions: Vec<PredictionRecord> = match (&a.predictions, &a.model) {
        (Some(p), _) => read_jsonl(p)?,
        (None, Some(dir)) => {
            let model = DetectorModel::load(dir)?;
            predict_all(&model, &examples)?
        }
        (None, None) => return Err(CliError::Validation("either --predictions or --model is required".into())),
    };
    let report = evaluate(&examples, &predictions)?;
    if let Some(path) = &a.predictions_out {
        atomic_file(path, |tmp| write_jsonl(tmp, &predictions))?;
    }
    write_json(&a.out, &report)?;
    if let Some(path) = &a.text {
        write_text(path, &report.render_text())?;
    }
    let directions: BTreeMap<String, Value> = report
        .directions
        .iter()
        .map(|(d, r)| {
            (
                d.as_str().to_string(),
                json!({
                    "examples": r.examples,
                    "f1": r.f1,
                    "precision": r.precision,
                    "recall": r.recall,
                    "accuracy": r.accuracy,
                }),
            )
        })
        .collect();
    Ok(json!({ "command": "evaluate", "directions": directions }))
}

fn report_bleu(a: ReportBleu) -> Result<Value, CliError> {
    if !(0.0..=100.0).contains(&a.threshold) {
        return Err(CliError::Validation(format!("--threshold {} outside [0, 100]", a.threshold)));
    }
    if a.max_ngram == 0 {
        return Err(CliError::Validation("--max-ngram must be positive".into()));
    }
    let examples = read_examples(&a.examples)?;
    let predictions: Vec<PredictionRecord> = match &a.predictions {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let cfg = BleuConfig {
        tokenizer: a.tokenizer,
        max_ngram: a.max_ngram,
        smoothing: a.smoothing,
        weights: Vec::new(),
    };
    let cases = cases_from_examples(&examples, &predictions);
    let report = bleu_vs_label_report(&cases, &cfg, a.threshold);
    write_json(&a.out, &report)?;
    if let Some(path) = &a.text {
        write_text(path, &report.render_text())?;
    }
    Ok(json!({
        "command": "report-bleu",
        "cases": report.cases_scored,
        "reported": report.entries.len(),
        "threshold": a.threshold,
    }))
}

fn serve(a: Serve) -> Result<Value, CliError> {
    let (settings, base) = match &a.config {
        Some(p) => (Settings::load(p)?, config_dir(p).to_path_buf()),
        None => (Settings::default(), std::path::PathBuf::from(".")),
    };
    let mut settings = settings.with_env();
    if let Some(host) = a.host {
        settings.server.host = host;
    }
    if let Some(port) = a.port {
        settings.server.port = port;
    }
    if let Some(model) = a.model {
        settings.detector.model_path = Some(model);
    }
    if let Some(dir) = a.storage {
        settings.storage.dir = Some(dir);
    }
    let addr = settings.addr()?;
    let service: ChatService = settings.build(&base)?;
    let service = Arc::new(service);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(format!("runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Io(format!("bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Io(e.to_string()))?;
        println!(
            "{}",
            json!({ "command": "serve", "listening": local.to_string(), "sessions": service.session_count() })
        );
        tokio::select! {
            r = xlchat_service::serve(listener, service) => r.map_err(|e| CliError::Io(format!("server: {e}")))?,
            r = tokio::signal::ctrl_c() => r.map_err(|e| CliError::Io(format!("signal: {e}")))?,
        }
        Ok(json!({ "command": "serve", "stopped": true }))
    })
}

use std::collections::HashMap;

use candle_core::{Device, Tensor};
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::encoder::{BertClassifier, Dropout, ParamSource};
use super::input::{assemble_input, DetectorInput};
use super::model::{load_checkpoint, DetectorModel, TrainingManifest};
use super::tokenizer::{hex, Tokenize, WordPiece};
use super::{DetectorConfig, DetectorError, ScheduleConfig};
use crate::corpus::{Label, LabeledExample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub steps: u64,
    pub mean_loss: f64,
}

/// Learning-rate multiplier for optimizer step `step` (0-based): linear
/// warm-up, then `1 / sqrt((step + shift) / timescale)` with
/// `shift = timescale - warmup`.
pub fn inverse_sqrt_factor(step: u64, schedule: &ScheduleConfig) -> f64 {
    let warmup = schedule.warmup_steps;
    if step < warmup {
        return step as f64 / warmup.max(1) as f64;
    }
    let timescale = schedule
        .timescale
        .unwrap_or(if warmup > 0 { warmup } else { 10_000 }) as f64;
    let shift = timescale - warmup as f64;
    1.0 / ((step as f64 + shift) / timescale).sqrt()
}

fn dataset_fingerprint(examples: &[LabeledExample]) -> String {
    let mut h = Sha256::new();
    for e in examples {
        h.update(serde_json::to_vec(e).expect("examples serialize"));
        h.update(b"\n");
    }
    hex(&h.finalize())
}

// Independent streams derived from the run seed.
const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

struct Batch {
    ids: Tensor,
    types: Tensor,
    mask: Option<Tensor>,
    labels: Tensor,
}

fn make_batch(inputs: &[&DetectorInput], labels: &[u32], pad: u32) -> candle_core::Result<Batch> {
    let dev = Device::Cpu;
    let b = inputs.len();
    let s = inputs.iter().map(|x| x.len()).max().unwrap_or(0);
    let mut ids = Vec::with_capacity(b * s);
    let mut types = Vec::with_capacity(b * s);
    let mut mask = Vec::with_capacity(b * s);
    for x in inputs {
        let n = x.len();
        ids.extend_from_slice(&x.token_ids);
        ids.extend(std::iter::repeat_n(pad, s - n));
        types.extend_from_slice(&x.type_ids);
        types.extend(std::iter::repeat_n(0, s - n));
        mask.extend(std::iter::repeat_n(1f32, n));
        mask.extend(std::iter::repeat_n(0f32, s - n));
    }
    let padded = mask.contains(&0.0);
    Ok(Batch {
        ids: Tensor::from_vec(ids, (b, s), &dev)?,
        types: Tensor::from_vec(types, (b, s), &dev)?,
        mask: if padded {
            Some(Tensor::from_vec(mask, (b, s), &dev)?)
        } else {
            None
        },
        labels: Tensor::new(labels, &dev)?,
    })
}

pub fn train(examples: &[LabeledExample], cfg: &DetectorConfig) -> Result<DetectorModel, DetectorError> {
    train_with_progress(examples, cfg, &mut |_| {})
}

/// Trains a detector, calling `on_epoch` after every epoch.
///
/// All randomness (initialization, shuffling, dropout) derives from
/// `cfg.seed`, so equal inputs give bitwise-equal weights.
pub fn train_with_progress(
    examples: &[LabeledExample],
    cfg: &DetectorConfig,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<DetectorModel, DetectorError> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(DetectorError::EmptyTrainingSet);
    }
    let erroneous = examples.iter().filter(|e| e.label.is_erroneous()).count();
    if erroneous == 0 {
        return Err(DetectorError::SingleClass(Label::Correct));
    }
    if erroneous == examples.len() {
        return Err(DetectorError::SingleClass(Label::Erroneous));
    }

    let empty = HashMap::new();
    let checkpoint;
    let (encoder, vocab, loaded, fresh_head) = match cfg.encoder_id.strip_prefix("local:") {
        Some(dir) => {
            checkpoint = load_checkpoint(std::path::Path::new(dir), cfg.lowercase)?;
            (checkpoint.encoder.clone(), checkpoint.vocab.clone(), &checkpoint.tensors, true)
        }
        None => {
            let texts = examples.iter().flat_map(|e| {
                let q = &e.quad;
                [q.ctx_src.as_str(), q.ctx_tgt.as_str(), q.resp_src.as_str(), q.resp_tgt.as_str()]
            });
            let vocab = WordPiece::build(texts, cfg.max_vocab, cfg.lowercase)?;
            let mut enc = cfg.encoder.clone();
            enc.vocab_size = vocab.len();
            (enc, vocab, &empty, false)
        }
    };
    if cfg.max_length > encoder.max_position_embeddings {
        return Err(DetectorError::Config(format!(
            "max_length {} exceeds the encoder's {} positions",
            cfg.max_length, encoder.max_position_embeddings
        )));
    }

    let inputs = examples
        .iter()
        .map(|e| assemble_input(&e.quad, &vocab, cfg.max_length))
        .collect::<Result<Vec<_>, _>>()?;
    let targets: Vec<u32> = examples.iter().map(|e| e.label.is_erroneous() as u32).collect();

    let mut src = ParamSource::new(loaded, true, fresh_head, true, encoder.initializer_range, cfg.seed);
    let model = BertClassifier::build(&encoder, &mut src)?;
    let params = src.tensors;
    let mut opt = AdamW::new(
        src.vars,
        ParamsAdamW {
            lr: cfg.max_lr,
            beta1: cfg.optimizer.beta1,
            beta2: cfg.optimizer.beta2,
            eps: cfg.optimizer.eps,
            weight_decay: cfg.optimizer.weight_decay,
        },
    )?;
    let mut shuffle_rng = stream(cfg.seed, SHUFFLE_STREAM);
    let mut dropout = Dropout {
        p: encoder.hidden_dropout_prob,
        rng: stream(cfg.seed, DROPOUT_STREAM),
    };
    let pad = vocab.special_ids().pad;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut step = 0u64;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batches = 0u64;
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&DetectorInput> = chunk.iter().map(|&i| &inputs[i]).collect();
            let ys: Vec<u32> = chunk.iter().map(|&i| targets[i]).collect();
            let batch = make_batch(&xs, &ys, pad)?;
            let logits = model.forward(&batch.ids, &batch.types, batch.mask.as_ref(), Some(&mut dropout))?;
            let loss = candle_nn::loss::cross_entropy(&logits, &batch.labels)?;
            opt.set_learning_rate(cfg.max_lr * inverse_sqrt_factor(step, &cfg.schedule));
            opt.backward_step(&loss)?;
            loss_sum += loss.to_scalar::<f32>()? as f64;
            batches += 1;
            step += 1;
        }
        let stats = EpochStats {
            epoch: epoch + 1,
            steps: batches,
            mean_loss: loss_sum / batches.max(1) as f64,
        };
        tracing::info!(epoch = stats.epoch, loss = stats.mean_loss, "epoch done");
        on_epoch(&stats);
        epochs.push(stats);
    }

    let manifest = TrainingManifest {
        dataset_sha256: dataset_fingerprint(examples),
        examples: examples.len(),
        erroneous,
        correct: examples.len() - erroneous,
        steps: step,
        epochs,
        config: cfg.clone(),
    };
    let detached: HashMap<String, Tensor> = params
        .into_iter()
        .map(|(k, t)| (k, t.detach()))
        .collect();
    DetectorModel::from_params(&encoder, detached, vocab, cfg, Some(manifest))
}

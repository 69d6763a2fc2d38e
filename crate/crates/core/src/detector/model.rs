//! A trained detector and its on-disk artifact.
//!
//! Artifact layout: `config.json`, `vocab.txt`, `encoder.safetensors`
//! (`bert.*` tensors), `head.safetensors` (`classifier.*`) and
//! `manifest.json` describing the training run.

use std::collections::HashMap;
use std::path::Path;

use candle_core::{Device, Tensor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encoder::{normalize_checkpoint_names, softmax2, BertClassifier, EncoderConfig, ParamSource};
use super::input::{assemble_input, DetectorInput};
use super::tokenizer::WordPiece;
use super::train::EpochStats;
use super::{DetectorConfig, DetectorError, ErrorDetector, Prediction, LABEL_MAP};
use crate::corpus::{ChatQuad, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ArtifactConfig {
    encoder_id: String,
    encoder: EncoderConfig,
    max_length: usize,
    threshold: f64,
    seed: u64,
    label_map: Vec<Label>,
    vocab_size: usize,
    vocab_sha256: String,
    lowercase: bool,
}

/// Provenance of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub dataset_sha256: String,
    pub examples: usize,
    pub erroneous: usize,
    pub correct: usize,
    pub steps: u64,
    pub epochs: Vec<EpochStats>,
    pub config: DetectorConfig,
}

#[derive(Debug, Clone)]
pub struct DetectorModel {
    pub(crate) classifier: BertClassifier,
    pub(crate) params: Vec<(String, Tensor)>,
    pub(crate) vocab: WordPiece,
    pub(crate) encoder_id: String,
    pub(crate) max_length: usize,
    pub(crate) threshold: f64,
    pub(crate) seed: u64,
    pub(crate) manifest: Option<TrainingManifest>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> DetectorError {
    DetectorError::Io(format!("{}: {e}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, DetectorError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| DetectorError::Artifact(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DetectorError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| DetectorError::Artifact(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn load_tensors(path: &Path) -> Result<HashMap<String, Tensor>, DetectorError> {
    if !path.exists() {
        return Err(io_err(path, "not found"));
    }
    Ok(candle_core::safetensors::load(path, &Device::Cpu)?)
}

/// A BERT checkpoint directory: encoder geometry, vocabulary and weights.
pub(crate) struct Checkpoint {
    pub(crate) encoder: EncoderConfig,
    pub(crate) vocab: WordPiece,
    pub(crate) tensors: HashMap<String, Tensor>,
}

pub(crate) fn load_checkpoint(dir: &Path, lowercase: bool) -> Result<Checkpoint, DetectorError> {
    let encoder: EncoderConfig = read_json(&dir.join("config.json"))?;
    #[derive(Deserialize)]
    struct TokCfg {
        do_lower_case: Option<bool>,
    }
    let tok = dir.join("tokenizer_config.json");
    let lowercase = if tok.exists() {
        read_json::<TokCfg>(&tok)?.do_lower_case.unwrap_or(lowercase)
    } else {
        lowercase
    };
    let vocab = WordPiece::load(&dir.join("vocab.txt"), lowercase)?;
    if vocab.len() != encoder.vocab_size {
        return Err(DetectorError::VocabMismatch(format!(
            "vocab.txt has {} entries, config.json says {}",
            vocab.len(),
            encoder.vocab_size
        )));
    }
    let tensors = normalize_checkpoint_names(load_tensors(&dir.join("model.safetensors"))?);
    Ok(Checkpoint {
        encoder,
        vocab,
        tensors,
    })
}

impl DetectorModel {
    pub(crate) fn from_params(
        encoder: &EncoderConfig,
        params: HashMap<String, Tensor>,
        vocab: WordPiece,
        cfg: &DetectorConfig,
        manifest: Option<TrainingManifest>,
    ) -> Result<Self, DetectorError> {
        let mut src = ParamSource::new(&params, false, false, false, encoder.initializer_range, 0);
        let classifier = BertClassifier::build(encoder, &mut src)?;
        Ok(DetectorModel {
            classifier,
            params: src.tensors.into_iter().collect(),
            vocab,
            encoder_id: cfg.encoder_id.clone(),
            max_length: cfg.max_length,
            threshold: cfg.threshold,
            seed: cfg.seed,
            manifest,
        })
    }

    pub fn vocab(&self) -> &WordPiece {
        &self.vocab
    }

    pub fn encoder_config(&self) -> &EncoderConfig {
        self.classifier.config()
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        self.threshold = threshold;
    }

    pub fn manifest(&self) -> Option<&TrainingManifest> {
        self.manifest.as_ref()
    }

    /// Named parameter tensors in name order.
    pub fn parameters(&self) -> &[(String, Tensor)] {
        &self.params
    }

    pub fn encode(&self, quad: &ChatQuad) -> Result<DetectorInput, DetectorError> {
        assemble_input(quad, &self.vocab, self.max_length)
    }

    /// Raw logits `[correct, erroneous]`.
    pub fn logits(&self, quad: &ChatQuad) -> Result<[f32; 2], DetectorError> {
        let x = self.encode(quad)?;
        let dev = Device::Cpu;
        let ids = Tensor::new(x.token_ids.as_slice(), &dev)?.unsqueeze(0)?;
        let types = Tensor::new(x.type_ids.as_slice(), &dev)?.unsqueeze(0)?;
        let out: Vec<f32> = self.classifier.forward(&ids, &types, None, None)?.flatten_all()?.to_vec1()?;
        Ok([out[0], out[1]])
    }

    pub fn predict_batch(&self, quads: &[ChatQuad]) -> Vec<Result<Prediction, DetectorError>> {
        quads.par_iter().map(|q| self.predict(q)).collect()
    }

    pub fn save(&self, dir: &Path) -> Result<(), DetectorError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let cfg = ArtifactConfig {
            encoder_id: self.encoder_id.clone(),
            encoder: self.encoder_config().clone(),
            max_length: self.max_length,
            threshold: self.threshold,
            seed: self.seed,
            label_map: LABEL_MAP.to_vec(),
            vocab_size: self.vocab.len(),
            vocab_sha256: self.vocab.fingerprint(),
            lowercase: self.vocab.lowercase(),
        };
        write_json(&dir.join("config.json"), &cfg)?;
        self.vocab.save(&dir.join("vocab.txt"))?;
        let (head, enc): (Vec<_>, Vec<_>) = self
            .params
            .iter()
            .cloned()
            .partition(|(k, _)| k.starts_with("classifier."));
        let enc: HashMap<String, Tensor> = enc.into_iter().collect();
        let head: HashMap<String, Tensor> = head.into_iter().collect();
        candle_core::safetensors::save(&enc, dir.join("encoder.safetensors"))?;
        candle_core::safetensors::save(&head, dir.join("head.safetensors"))?;
        if let Some(m) = &self.manifest {
            write_json(&dir.join("manifest.json"), m)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, DetectorError> {
        let cfg: ArtifactConfig = read_json(&dir.join("config.json"))?;
        if cfg.label_map != LABEL_MAP {
            return Err(DetectorError::Artifact(format!("unsupported label map {:?}", cfg.label_map)));
        }
        let vocab = WordPiece::load(&dir.join("vocab.txt"), cfg.lowercase)?;
        if vocab.len() != cfg.vocab_size || vocab.fingerprint() != cfg.vocab_sha256 {
            return Err(DetectorError::VocabMismatch(format!(
                "vocab.txt ({} entries) differs from the vocabulary the model was trained with ({} entries)",
                vocab.len(),
                cfg.vocab_size
            )));
        }
        let mut params = load_tensors(&dir.join("encoder.safetensors"))?;
        params.extend(load_tensors(&dir.join("head.safetensors"))?);
        let rows = params
            .get("bert.embeddings.word_embeddings.weight")
            .map(|t| t.dims().first().copied().unwrap_or(0));
        if rows.is_some_and(|r| r != vocab.len()) {
            return Err(DetectorError::VocabMismatch(format!(
                "embedding table has {} rows for {} vocabulary entries",
                rows.unwrap_or(0),
                vocab.len()
            )));
        }
        let manifest_path = dir.join("manifest.json");
        let manifest = if manifest_path.exists() {
            Some(read_json(&manifest_path)?)
        } else {
            None
        };
        let dc = DetectorConfig {
            encoder_id: cfg.encoder_id,
            max_length: cfg.max_length,
            threshold: cfg.threshold,
            seed: cfg.seed,
            ..DetectorConfig::default()
        };
        Self::from_params(&cfg.encoder, params, vocab, &dc, manifest)
    }

    /// Writes the encoder as a BERT checkpoint directory usable as
    /// `local:<dir>` starting point.
    pub fn export_encoder(&self, dir: &Path) -> Result<(), DetectorError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        write_json(&dir.join("config.json"), self.encoder_config())?;
        self.vocab.save(&dir.join("vocab.txt"))?;
        let enc: HashMap<String, Tensor> = self
            .params
            .iter()
            .filter(|(k, _)| k.starts_with("bert."))
            .cloned()
            .collect();
        candle_core::safetensors::save(&enc, dir.join("model.safetensors"))?;
        Ok(())
    }
}

impl ErrorDetector for DetectorModel {
    fn predict(&self, quad: &ChatQuad) -> Result<Prediction, DetectorError> {
        let p = softmax2(self.logits(quad)?);
        Ok(Prediction::from_probability(p[1], self.threshold))
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

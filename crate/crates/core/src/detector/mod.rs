//! Binary classifier over (ctx_src, ctx_tgt, resp_src, resp_tgt) quads.

mod baseline;
mod encoder;
mod input;
mod model;
pub mod tokenizer;
mod train;
mod training_set;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ChatQuad, Direction, Label, Origin};

pub use baseline::ConstantDetector;
pub use encoder::{softmax2, BertClassifier, EncoderConfig};
pub use input::{assemble_input, DetectorInput, SPECIAL_TOKENS};
pub use model::{DetectorModel, TrainingManifest};
pub use tokenizer::{SpecialIds, Tokenize, WordPiece};
pub use train::{inverse_sqrt_factor, train, train_with_progress, EpochStats};
pub use training_set::{generate_training_set, AlignedPair};

/// Label index order of the classification head.
pub const LABEL_MAP: [Label; 2] = [Label::Correct, Label::Erroneous];

#[derive(Debug, thiserror::Error)]
pub enum DetectorError {
    #[error("invalid detector configuration: {0}")]
    Config(String),
    #[error("vocabulary: {0}")]
    Vocab(String),
    #[error("model vocabulary does not match: {0}")]
    VocabMismatch(String),
    #[error("{chat_id}/{index}: field {field} is empty")]
    EmptyField {
        chat_id: String,
        index: usize,
        field: &'static str,
    },
    #[error("{chat_id}/{index}: response translation needs {tokens} tokens, max_length is {max_length}")]
    InputTooLong {
        chat_id: String,
        index: usize,
        tokens: usize,
        max_length: usize,
    },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set contains only {0} examples")]
    SingleClass(Label),
    #[error("tensor `{name}` has shape {got:?}, expected {expected:?}")]
    Shape {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("model artifact lacks tensor `{0}`")]
    MissingTensor(String),
    #[error("invalid model artifact: {0}")]
    Artifact(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Tensor(#[from] candle_core::Error),
    #[error("training set generation failed: {0}")]
    Backend(#[from] crate::backends::BackendError),
}

/// Outcome for one quad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub prob_erroneous: f64,
    pub prob_correct: f64,
}

impl Prediction {
    pub fn from_probability(prob_erroneous: f64, threshold: f64) -> Self {
        Prediction {
            label: if prob_erroneous >= threshold {
                Label::Erroneous
            } else {
                Label::Correct
            },
            prob_erroneous,
            prob_correct: 1.0 - prob_erroneous,
        }
    }
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub chat_id: String,
    pub index: usize,
    pub origin: Origin,
    pub direction: Direction,
    pub prob_erroneous: f64,
    pub predicted_label: Label,
}

impl PredictionRecord {
    pub fn new(quad: &ChatQuad, p: &Prediction) -> Self {
        PredictionRecord {
            chat_id: quad.chat_id.clone(),
            index: quad.index,
            origin: quad.origin,
            direction: quad.direction,
            prob_erroneous: p.prob_erroneous,
            predicted_label: p.label,
        }
    }
}

/// Anything that scores quads.
pub trait ErrorDetector: Send + Sync {
    fn predict(&self, quad: &ChatQuad) -> Result<Prediction, DetectorError>;

    fn threshold(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Inverse square-root decay with optional linear warm-up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub warmup_steps: u64,
    /// Decay timescale; defaults to `warmup_steps`, or 10 000 without warm-up.
    pub timescale: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// `scratch` trains a freshly initialized encoder; `local:<dir>` starts
    /// from a BERT checkpoint directory holding `config.json`, `vocab.txt`
    /// and `model.safetensors`.
    pub encoder_id: String,
    /// Geometry for `scratch` encoders; `vocab_size` is overwritten by the
    /// built vocabulary.
    pub encoder: EncoderConfig,
    pub max_vocab: usize,
    pub lowercase: bool,
    pub max_length: usize,
    pub max_lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub threshold: f64,
    pub optimizer: OptimizerConfig,
    pub schedule: ScheduleConfig,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            encoder_id: "scratch".into(),
            encoder: EncoderConfig::reduced(0),
            max_vocab: 30_000,
            lowercase: false,
            max_length: 512,
            max_lr: 1e-3,
            batch_size: 16,
            epochs: 1,
            seed: 42,
            threshold: 0.5,
            optimizer: OptimizerConfig::default(),
            schedule: ScheduleConfig::default(),
        }
    }
}

impl DetectorConfig {
    /// Settings commonly used when fine-tuning a pretrained encoder: a
    /// smaller peak rate reached after warm-up. Not the default.
    pub fn fine_tune_profile() -> Self {
        DetectorConfig {
            max_lr: 2e-5,
            epochs: 3,
            schedule: ScheduleConfig {
                warmup_steps: 500,
                timescale: None,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |m: String| Err(DetectorError::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.max_length <= SPECIAL_TOKENS {
            return bad(format!("max_length must exceed {SPECIAL_TOKENS}"));
        }
        if !(self.max_lr > 0.0 && self.max_lr.is_finite()) {
            return bad(format!("max_lr must be positive, got {}", self.max_lr));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold {} outside [0, 1]", self.threshold));
        }
        if self.encoder_id != "scratch" && !self.encoder_id.starts_with("local:") {
            return bad(format!(
                "unknown encoder_id `{}`; expected `scratch` or `local:<dir>`",
                self.encoder_id
            ));
        }
        if self.max_vocab < 8 {
            return bad("max_vocab must be at least 8".into());
        }
        Ok(())
    }

    /// Reads a TOML file; either a bare table or one under `[detector]`.
    pub fn load(path: &Path) -> Result<Self, DetectorError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DetectorError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, DetectorError> {
        let value: toml::Table = toml::from_str(text).map_err(|e| DetectorError::Config(e.to_string()))?;
        let table = match value.get("detector") {
            Some(toml::Value::Table(t)) => t.clone(),
            Some(_) => return Err(DetectorError::Config("`detector` must be a table".into())),
            None => value,
        };
        let cfg: DetectorConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| DetectorError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = DetectorConfig::default();
        assert_eq!(c.max_lr, 1e-3);
        assert_eq!(c.batch_size, 16);
        assert_eq!(c.epochs, 1);
        assert_eq!(c.max_length, 512);
        assert_eq!(c.threshold, 0.5);
        assert_eq!(c.optimizer.beta2, 0.98);
        c.validate().unwrap();
    }

    #[test]
    fn parses_section_or_bare() {
        let a = DetectorConfig::parse("[detector]\nepochs = 3\nseed = 9\n").unwrap();
        assert_eq!((a.epochs, a.seed), (3, 9));
        let b = DetectorConfig::parse("batch_size = 4\n[schedule]\nwarmup_steps = 10\n").unwrap();
        assert_eq!(b.batch_size, 4);
        assert_eq!(b.schedule.warmup_steps, 10);
        assert!(DetectorConfig::parse("epoch = 3").is_err());
        assert!(DetectorConfig::parse("encoder_id = \"hub:bert\"").is_err());
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(Prediction::from_probability(0.5, 0.5).label, Label::Erroneous);
        assert_eq!(Prediction::from_probability(0.4999, 0.5).label, Label::Correct);
    }
}

//! Accuracy against trivial baselines, erroneous-positive precision/recall/F,
//! per-origin confusion matrices, and sentence-BLEU comparison.

pub mod bleu;
mod metrics;
mod report;

use crate::corpus::Origin;

pub use bleu::{corpus_bleu, sentence_bleu, BleuConfig, BleuScore, BleuTokenizer, Smoothing};
pub use metrics::{
    accuracy, baseline_accuracies, confusion, confusion_from_labels, evaluate, prf, Baselines,
    ConfusionMatrix, EvalReport, MetricsReport, Prf,
};
pub use report::{bleu_vs_label_report, cases_from_examples, BleuCase, BleuReport, BleuReportEntry};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no examples to evaluate")]
    Empty,
    #[error("no prediction for {chat_id}/{index}/{origin}")]
    MissingPrediction {
        chat_id: String,
        index: usize,
        origin: Origin,
    },
    #[error("duplicate prediction for {chat_id}/{index}/{origin}")]
    DuplicatePrediction {
        chat_id: String,
        index: usize,
        origin: Origin,
    },
}

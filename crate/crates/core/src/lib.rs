//! Erroneous chat-translation detection.
//!
//! The pipeline runs from a bilingual chat corpus through coherence
//! filtering, machine and human translation, crowd verdict aggregation and
//! dataset construction to a quad-input error detector and its evaluation.

pub mod backends;
pub mod coherence;
pub mod corpus;
pub mod detector;
pub mod evaluation;
pub mod jsonl;
pub mod labeling;
pub mod percent;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use corpus::{
    build_quads, Chat, ChatQuad, CtxPolicy, Direction, Label, LabeledExample, Lang, Origin, SourceCorpus, Speaker,
    TranslationCandidate, Utterance, UtteranceRef,
};
pub use detector::{
    DetectorConfig, DetectorError, DetectorModel, ErrorDetector, Prediction, PredictionRecord,
};
pub use evaluation::{ConfusionMatrix, EvalReport, MetricsReport};
pub use percent::Percent;

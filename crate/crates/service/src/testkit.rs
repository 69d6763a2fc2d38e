//! Stand-ins for the detector and translation backend.

use std::collections::HashMap;

use xlchat_core::backends::{BackendError, BackendInfo, TranslationBackend, TranslationRequest};
use xlchat_core::detector::{DetectorError, ErrorDetector, Prediction};
use xlchat_core::{ChatQuad, Origin};

/// Returns a fixed probability per response text, `default` otherwise.
/// A response equal to `fail_on` makes the detector fail.
#[derive(Debug, Clone)]
pub struct ScriptedDetector {
    pub probs: HashMap<String, f64>,
    pub default: f64,
    pub fail_on: Option<String>,
}

impl ScriptedDetector {
    pub fn new(probs: &[(&str, f64)]) -> Self {
        ScriptedDetector {
            probs: probs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            default: 0.1,
            fail_on: None,
        }
    }
}

impl ErrorDetector for ScriptedDetector {
    fn predict(&self, quad: &ChatQuad) -> Result<Prediction, DetectorError> {
        if self.fail_on.as_deref() == Some(quad.resp_src.as_str()) {
            return Err(DetectorError::Config("scripted failure".into()));
        }
        let p = self.probs.get(&quad.resp_src).copied().unwrap_or(self.default);
        Ok(Prediction::from_probability(p, 0.5))
    }

    fn threshold(&self) -> f64 {
        0.5
    }
}

/// Tags each sentence with the target language; fails on texts containing
/// `fail_marker`.
#[derive(Debug, Clone)]
pub struct TaggingBackend {
    info: BackendInfo,
    pub fail_marker: String,
}

impl Default for TaggingBackend {
    fn default() -> Self {
        TaggingBackend {
            info: BackendInfo::new("tagging", Origin::MtHigh),
            fail_marker: "#fail".into(),
        }
    }
}

impl TranslationBackend for TaggingBackend {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn translate(&self, req: &TranslationRequest<'_>) -> Result<Vec<String>, BackendError> {
        if req.sentences.iter().any(|s| s.contains(&self.fail_marker)) {
            return Err(BackendError::Unreachable {
                backend: self.info.name.clone(),
                at: None,
                attempts: 1,
                message: "scripted outage".into(),
            });
        }
        Ok(req
            .sentences
            .iter()
            .map(|s| format!("[{}] {s}", req.direction.target()))
            .collect())
    }
}

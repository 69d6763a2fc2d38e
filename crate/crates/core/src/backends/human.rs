use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendError, BackendInfo, TranslationBackend, TranslationRequest};
use crate::corpus::{CorpusError, Origin, UtteranceRef};
use crate::jsonl;

/// One line of a translator-supplied file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanTranslation {
    pub chat_id: String,
    pub index: usize,
    pub text: String,
}

/// Professional translations looked up by utterance coordinates.
#[derive(Debug, Clone)]
pub struct HumanTranslations {
    info: BackendInfo,
    by_utterance: HashMap<UtteranceRef, String>,
}

impl HumanTranslations {
    pub fn from_records(
        name: impl Into<String>,
        records: Vec<HumanTranslation>,
    ) -> Result<Self, CorpusError> {
        let mut by_utterance = HashMap::with_capacity(records.len());
        for r in records {
            let at = UtteranceRef::new(r.chat_id, r.index);
            if r.text.trim().is_empty() {
                return Err(CorpusError::Record(format!("empty human translation for {at}")));
            }
            if by_utterance.insert(at.clone(), r.text).is_some() {
                return Err(CorpusError::Record(format!("duplicate human translation for {at}")));
            }
        }
        Ok(HumanTranslations {
            info: BackendInfo::new(name, Origin::Human),
            by_utterance,
        })
    }

    pub fn load(name: impl Into<String>, path: &Path) -> Result<Self, CorpusError> {
        let records: Vec<HumanTranslation> = jsonl::read_jsonl(path)?;
        Self::from_records(name, records)
    }

    pub fn with_info(mut self, info: BackendInfo) -> Self {
        self.info = info;
        self
    }

    pub fn get(&self, at: &UtteranceRef) -> Option<&str> {
        self.by_utterance.get(at).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_utterance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_utterance.is_empty()
    }

    pub fn into_map(self) -> HashMap<UtteranceRef, String> {
        self.by_utterance
    }
}

impl TranslationBackend for HumanTranslations {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    /// Returns the aligned translation of the whole utterance; requests
    /// without coordinates cannot be served.
    fn translate(&self, req: &TranslationRequest<'_>) -> Result<Vec<String>, BackendError> {
        let Some(at) = req.at else {
            return Err(BackendError::Config(
                "human translations are looked up by utterance coordinates".into(),
            ));
        };
        if req.sentences.len() != 1 {
            return Err(BackendError::Protocol {
                backend: self.info.name.clone(),
                at: Some(at.clone()),
                expected: 1,
                got: req.sentences.len(),
            });
        }
        self.get(at)
            .map(|t| vec![t.to_string()])
            .ok_or_else(|| BackendError::Alignment { at: at.clone() })
    }
}

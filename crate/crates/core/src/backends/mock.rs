use std::collections::HashMap;
use std::hash::Hasher;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BackendError, BackendInfo, Degradation, TranslationBackend, TranslationRequest};
use crate::corpus::{Origin, UtteranceRef};

/// Stand-in for a low-quality MT model: applies seeded word dropout and
/// adjacent-token swaps to a reference translation.
///
/// References are looked up by utterance coordinates, then by source text;
/// without a reference the source sentence itself is degraded. The output
/// depends only on the seed, the coordinates and the input.
#[derive(Debug, Clone)]
pub struct DegradingMock {
    info: BackendInfo,
    seed: u64,
    degradation: Degradation,
    by_utterance: HashMap<UtteranceRef, String>,
    by_text: HashMap<String, String>,
}

/// Substituted when dropout removes every token.
pub const EMPTY_SUBSTITUTE: &str = "<unk>";

impl DegradingMock {
    pub fn new(name: impl Into<String>, seed: u64, degradation: Degradation) -> Self {
        DegradingMock {
            info: BackendInfo::new(name, Origin::MtLow),
            seed,
            degradation,
            by_utterance: HashMap::new(),
            by_text: HashMap::new(),
        }
    }

    pub fn with_quality(mut self, quality: Origin) -> Self {
        self.info.quality = quality;
        self
    }

    pub fn with_info(mut self, info: BackendInfo) -> Self {
        self.info = info;
        self
    }

    pub fn with_references_by_utterance(mut self, refs: HashMap<UtteranceRef, String>) -> Self {
        self.by_utterance = refs;
        self
    }

    pub fn with_references_by_text(mut self, refs: HashMap<String, String>) -> Self {
        self.by_text = refs;
        self
    }

    fn reference<'a>(&'a self, at: Option<&UtteranceRef>, source: &'a str, whole: bool) -> &'a str {
        if whole {
            if let Some(r) = at.and_then(|at| self.by_utterance.get(at)) {
                return r;
            }
        }
        self.by_text.get(source).map(String::as_str).unwrap_or(source)
    }

    pub fn degrade(&self, at: Option<&UtteranceRef>, text: &str) -> String {
        let mut h = Fnv1a::default();
        h.write_u64(self.seed);
        if let Some(at) = at {
            h.write(at.chat_id.as_bytes());
            h.write_u8(0xff);
            h.write_usize(at.index);
        }
        h.write(text.as_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());

        let spaced = text.contains(char::is_whitespace);
        let tokens: Vec<String> = if spaced {
            text.split_whitespace().map(str::to_string).collect()
        } else {
            text.chars().map(String::from).collect()
        };
        let Degradation { drop_prob, swap_prob } = self.degradation;
        let mut kept: Vec<String> = tokens
            .into_iter()
            .filter(|_| !(drop_prob > 0.0 && rng.random_bool(drop_prob)))
            .collect();
        if swap_prob > 0.0 {
            let mut i = 0;
            while i + 1 < kept.len() {
                if rng.random_bool(swap_prob) {
                    kept.swap(i, i + 1);
                    i += 2;
                } else {
                    i += 1;
                }
            }
        }
        if kept.is_empty() {
            return EMPTY_SUBSTITUTE.to_string();
        }
        if spaced {
            kept.join(" ")
        } else {
            kept.concat()
        }
    }
}

impl TranslationBackend for DegradingMock {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn translate(&self, req: &TranslationRequest<'_>) -> Result<Vec<String>, BackendError> {
        let whole = req.sentences.len() == 1;
        Ok(req
            .sentences
            .iter()
            .map(|s| self.degrade(req.at, self.reference(req.at, s, whole)))
            .collect())
    }
}

#[derive(Debug, Clone, Copy)]
struct Fnv1a(u64);

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }
}

impl Hasher for Fnv1a {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::translate_utterance;
    use crate::corpus::Direction;

    fn mock(drop_prob: f64, swap_prob: f64) -> DegradingMock {
        DegradingMock::new("mock", 42, Degradation { drop_prob, swap_prob })
    }

    #[test]
    fn deterministic() {
        let m = mock(0.3, 0.3);
        let a = translate_utterance(&m, Direction::EnJa, None, "I like dogs and cats very much .").unwrap();
        for _ in 0..5 {
            let b = translate_utterance(&m, Direction::EnJa, None, "I like dogs and cats very much .").unwrap();
            assert_eq!(a, b);
        }
        let other = DegradingMock::new("mock", 43, Degradation { drop_prob: 0.3, swap_prob: 0.3 });
        let c = translate_utterance(&other, Direction::EnJa, None, "I like dogs and cats very much .").unwrap();
        // different seeds are allowed to coincide, but not on this input
        assert_ne!(a, c);
    }

    #[test]
    fn zero_noise_passes_reference_through() {
        let at = UtteranceRef::new("c", 1);
        let m = mock(0.0, 0.0).with_references_by_utterance(
            [(at.clone(), "犬が好きです。".to_string())].into_iter().collect(),
        );
        let out = translate_utterance(&m, Direction::EnJa, Some(&at), "I like dogs.").unwrap();
        assert_eq!(out, "犬が好きです。");
        // no reference: source passes through
        let out = translate_utterance(&m, Direction::EnJa, None, "I like dogs.").unwrap();
        assert_eq!(out, "I like dogs.");
    }

    #[test]
    fn full_dropout_substitutes() {
        let m = mock(1.0, 0.0);
        let out = translate_utterance(&m, Direction::JaEn, None, "rice").unwrap();
        assert_eq!(out, EMPTY_SUBSTITUTE);
        assert_ne!(out, "rice");
    }

    #[test]
    fn text_references_used_for_windows() {
        let m = mock(0.0, 0.0).with_references_by_text(
            [("a".to_string(), "A".to_string()), ("b".to_string(), "B".to_string())]
                .into_iter()
                .collect(),
        );
        let out = m
            .translate(&TranslationRequest {
                at: None,
                direction: Direction::EnJa,
                sentences: &["a".to_string(), "b".to_string()],
            })
            .unwrap();
        assert_eq!(out, vec!["A", "B"]);
    }
}

use serde::{Deserialize, Serialize};

use super::DetectorError;
use crate::backends::{translate_utterance, TranslationBackend};
use crate::corpus::{ChatQuad, Direction, Label, LabeledExample, Origin, UtteranceRef};

/// One line of a sentence-aligned parallel corpus; consecutive lines are
/// consecutive turns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub src: String,
    pub tgt: String,
}

/// Builds a balanced training set from consecutive aligned pairs.
///
/// For each pair `i >= 1`, pair `i - 1` is the context. The reference
/// translation gives a `correct` example and the low-quality backend's output
/// for the same response gives an `erroneous` one. Examples are identified
/// as `(corpus_id, i)`.
pub fn generate_training_set(
    corpus_id: &str,
    pairs: &[AlignedPair],
    direction: Direction,
    low_quality: &dyn TranslationBackend,
) -> Result<Vec<LabeledExample>, DetectorError> {
    let mut out = Vec::with_capacity(pairs.len().saturating_sub(1) * 2);
    for i in 1..pairs.len() {
        let ctx = &pairs[i - 1];
        let resp = &pairs[i];
        let at = UtteranceRef::new(corpus_id, i);
        let bad = translate_utterance(low_quality, direction, Some(&at), &resp.src)?;
        let quad = |origin: Origin, resp_tgt: String| ChatQuad {
            chat_id: corpus_id.to_string(),
            index: i,
            direction,
            origin,
            ctx_src: ctx.src.clone(),
            ctx_tgt: ctx.tgt.clone(),
            resp_src: resp.src.clone(),
            resp_tgt,
        };
        out.push(LabeledExample {
            quad: quad(Origin::Human, resp.tgt.clone()),
            label: Label::Correct,
        });
        out.push(LabeledExample {
            quad: quad(low_quality.info().quality, bad),
            label: Label::Erroneous,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{DegradingMock, Degradation};

    #[test]
    fn balanced_and_context_is_previous_pair() {
        let pairs: Vec<AlignedPair> = (0..5)
            .map(|i| AlignedPair {
                src: format!("source sentence number {i}"),
                tgt: format!("target words for line {i}"),
            })
            .collect();
        let refs = pairs.iter().map(|p| (p.src.clone(), p.tgt.clone())).collect();
        let low = DegradingMock::new("low", 3, Degradation { drop_prob: 0.5, swap_prob: 0.5 })
            .with_references_by_text(refs);
        let set = generate_training_set("par", &pairs, Direction::EnJa, &low).unwrap();
        assert_eq!(set.len(), 8);
        let bad = set.iter().filter(|e| e.label == Label::Erroneous).count();
        assert_eq!(bad, 4);
        assert_eq!(set[2].quad.ctx_src, pairs[1].src);
        assert_eq!(set[2].quad.resp_tgt, pairs[2].tgt);
        assert_eq!(set[3].quad.origin, Origin::MtLow);
    }
}

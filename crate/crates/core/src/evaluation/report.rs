use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bleu::{sentence_bleu, BleuConfig};
use crate::corpus::{Direction, Label, LabeledExample, Origin};
use crate::detector::PredictionRecord;

/// One translation compared against its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuCase {
    pub chat_id: String,
    pub index: usize,
    pub origin: Origin,
    pub direction: Direction,
    pub context: Option<String>,
    pub source: String,
    pub hypothesis: String,
    pub reference: String,
    pub label: Option<Label>,
    pub predicted: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReportEntry {
    #[serde(flatten)]
    pub case: BleuCase,
    pub bleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub config: BleuConfig,
    pub threshold: f64,
    pub cases_scored: usize,
    pub entries: Vec<BleuReportEntry>,
}

/// Cases whose sentence-BLEU is at least `threshold` although the label or
/// the prediction says erroneous.
pub fn bleu_vs_label_report(cases: &[BleuCase], cfg: &BleuConfig, threshold: f64) -> BleuReport {
    let entries = cases
        .iter()
        .filter(|c| c.label == Some(Label::Erroneous) || c.predicted == Some(Label::Erroneous))
        .filter_map(|c| {
            let bleu = sentence_bleu(&c.hypothesis, &c.reference, cfg).score;
            (bleu >= threshold).then(|| BleuReportEntry {
                case: c.clone(),
                bleu,
            })
        })
        .collect();
    BleuReport {
        config: cfg.clone(),
        threshold,
        cases_scored: cases.len(),
        entries,
    }
}

/// Pairs every non-human example with the human translation of the same
/// response as reference. Examples without a human sibling are skipped.
pub fn cases_from_examples(
    examples: &[LabeledExample],
    predictions: &[PredictionRecord],
) -> Vec<BleuCase> {
    let human: HashMap<(&str, usize, Direction), &str> = examples
        .iter()
        .filter(|e| e.quad.origin == Origin::Human)
        .map(|e| {
            (
                (e.quad.chat_id.as_str(), e.quad.index, e.quad.direction),
                e.quad.resp_tgt.as_str(),
            )
        })
        .collect();
    let preds: HashMap<(&str, usize, Origin, Direction), Label> = predictions
        .iter()
        .map(|p| ((p.chat_id.as_str(), p.index, p.origin, p.direction), p.predicted_label))
        .collect();
    examples
        .iter()
        .filter(|e| e.quad.origin != Origin::Human)
        .filter_map(|e| {
            let q = &e.quad;
            let reference = human.get(&(q.chat_id.as_str(), q.index, q.direction))?;
            Some(BleuCase {
                chat_id: q.chat_id.clone(),
                index: q.index,
                origin: q.origin,
                direction: q.direction,
                context: Some(q.ctx_src.clone()),
                source: q.resp_src.clone(),
                hypothesis: q.resp_tgt.clone(),
                reference: reference.to_string(),
                label: Some(e.label),
                predicted: preds
                    .get(&(q.chat_id.as_str(), q.index, q.origin, q.direction))
                    .copied(),
            })
        })
        .collect()
}

impl BleuReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "sentence-BLEU >= {} with an erroneous label or prediction: {} of {} cases",
            self.threshold,
            self.entries.len(),
            self.cases_scored
        );
        let _ = writeln!(
            s,
            "config: tokenizer={:?} max_ngram={} smoothing={:?}",
            self.config.tokenizer, self.config.max_ngram, self.config.smoothing
        );
        for e in &self.entries {
            let c = &e.case;
            let _ = writeln!(s);
            let _ = writeln!(s, "{} #{} {} {}", c.chat_id, c.index, c.direction, c.origin);
            if let Some(ctx) = &c.context {
                let _ = writeln!(s, "  context     {ctx}");
            }
            let _ = writeln!(s, "  source      {}", c.source);
            let _ = writeln!(s, "  translation {}", c.hypothesis);
            let _ = writeln!(s, "  reference   {}", c.reference);
            let _ = writeln!(s, "  BLEU        {:.1}", e.bleu);
            if let Some(l) = c.label {
                let _ = writeln!(s, "  label       {l}");
            }
            if let Some(p) = c.predicted {
                let _ = writeln!(s, "  prediction  {p}");
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(hyp: &str, reference: &str, label: Label) -> BleuCase {
        BleuCase {
            chat_id: "c".into(),
            index: 1,
            origin: Origin::MtHigh,
            direction: Direction::JaEn,
            context: None,
            source: "src".into(),
            hypothesis: hyp.into(),
            reference: reference.into(),
            label: Some(label),
            predicted: None,
        }
    }

    #[test]
    fn all_correct_gives_empty_report() {
        let cases = vec![case("a b c d", "a b c d", Label::Correct)];
        let r = bleu_vs_label_report(&cases, &BleuConfig::default(), 10.0);
        assert!(r.entries.is_empty());
        assert_eq!(r.cases_scored, 1);
    }

    #[test]
    fn low_bleu_erroneous_not_reported() {
        let cases = vec![case("x y z", "a b c d", Label::Erroneous)];
        let r = bleu_vs_label_report(&cases, &BleuConfig::plain(), 10.0);
        assert!(r.entries.is_empty());
    }

    #[test]
    fn prediction_alone_flags() {
        let mut c = case("a b c d", "a b c d", Label::Correct);
        c.predicted = Some(Label::Erroneous);
        let r = bleu_vs_label_report(&[c], &BleuConfig::default(), 90.0);
        assert_eq!(r.entries.len(), 1);
    }
}

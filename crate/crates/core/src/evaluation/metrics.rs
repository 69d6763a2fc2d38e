use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Direction, Label, LabeledExample, Origin};
use crate::detector::{Prediction, PredictionRecord};
use crate::percent::Percent;

/// Binary confusion counts; positive means "predicted erroneous" and true
/// means "actually erroneous".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: Label, truth: Label) {
        match (predicted, truth) {
            (Label::Erroneous, Label::Erroneous) => self.tp += 1,
            (Label::Erroneous, Label::Correct) => self.fp += 1,
            (Label::Correct, Label::Erroneous) => self.fn_ += 1,
            (Label::Correct, Label::Correct) => self.tn += 1,
        }
    }

    pub fn actual_erroneous(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn actual_correct(&self) -> u64 {
        self.tn + self.fp
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;
    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: ConfusionMatrix) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = ConfusionMatrix>>(iter: I) -> Self {
        iter.fold(ConfusionMatrix::default(), Add::add)
    }
}

pub fn confusion(predictions: &[Prediction], labels: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    let predicted: Vec<Label> = predictions.iter().map(|p| p.label).collect();
    confusion_from_labels(&predicted, labels)
}

pub fn confusion_from_labels(predicted: &[Label], truth: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predicted.len(),
            labels: truth.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in predicted.iter().zip(truth) {
        cm.record(*p, *t);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: Percent,
    pub recall: Percent,
    pub f1: Percent,
}

/// Precision, recall and F1 on the erroneous class. Zero denominators give 0.
///
/// F1 is the harmonic mean of the unrounded precision and recall, which
/// reduces to `2tp / (2tp + fp + fn)`.
pub fn prf(cm: &ConfusionMatrix) -> Prf {
    Prf {
        precision: Percent::from_ratio(cm.tp, cm.tp + cm.fp),
        recall: Percent::from_ratio(cm.tp, cm.tp + cm.fn_),
        f1: Percent::from_ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_),
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<Percent, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::Empty);
    }
    Ok(Percent::from_ratio(cm.tp + cm.tn, cm.total()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Baselines {
    pub majority_label: Label,
    pub majority: Percent,
    pub minority: Percent,
}

/// Accuracies of the constant majority- and minority-class predictors.
/// The two always sum to exactly 100.00.
pub fn baseline_accuracies(labels: &[Label]) -> Result<Baselines, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let erroneous = labels.iter().filter(|l| l.is_erroneous()).count() as u64;
    let correct = labels.len() as u64 - erroneous;
    let (majority_label, majority_count) = if correct >= erroneous {
        (Label::Correct, correct)
    } else {
        (Label::Erroneous, erroneous)
    };
    let majority = Percent::from_ratio(majority_count, labels.len() as u64);
    Ok(Baselines {
        majority_label,
        majority,
        minority: majority.complement(),
    })
}

/// Metrics for one translation direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub examples: u64,
    pub accuracy: Percent,
    pub precision: Percent,
    pub recall: Percent,
    pub f1: Percent,
    pub confusion: ConfusionMatrix,
    pub per_origin: BTreeMap<Origin, ConfusionMatrix>,
    pub baselines: Baselines,
}

impl MetricsReport {
    /// Builds the report from per-origin matrices; the overall matrix is
    /// their sum.
    pub fn from_per_origin(per_origin: BTreeMap<Origin, ConfusionMatrix>) -> Result<Self, EvalError> {
        let cm: ConfusionMatrix = per_origin.values().copied().sum();
        let p = prf(&cm);
        let labels: Vec<Label> = std::iter::repeat_n(Label::Erroneous, cm.actual_erroneous() as usize)
            .chain(std::iter::repeat_n(Label::Correct, cm.actual_correct() as usize))
            .collect();
        Ok(MetricsReport {
            examples: cm.total(),
            accuracy: accuracy(&cm)?,
            precision: p.precision,
            recall: p.recall,
            f1: p.f1,
            confusion: cm,
            per_origin,
            baselines: baseline_accuracies(&labels)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub directions: BTreeMap<Direction, MetricsReport>,
}

type PredKey<'a> = (&'a str, usize, Origin, Direction);

/// Joins predictions to labeled examples and computes per-direction metrics.
pub fn evaluate(
    examples: &[LabeledExample],
    predictions: &[PredictionRecord],
) -> Result<EvalReport, EvalError> {
    let mut by_key: HashMap<PredKey<'_>, &PredictionRecord> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_key
            .insert((p.chat_id.as_str(), p.index, p.origin, p.direction), p)
            .is_some()
        {
            return Err(EvalError::DuplicatePrediction {
                chat_id: p.chat_id.clone(),
                index: p.index,
                origin: p.origin,
            });
        }
    }
    let mut per: BTreeMap<Direction, BTreeMap<Origin, ConfusionMatrix>> = BTreeMap::new();
    for e in examples {
        let q = &e.quad;
        let p = by_key
            .get(&(q.chat_id.as_str(), q.index, q.origin, q.direction))
            .ok_or_else(|| EvalError::MissingPrediction {
                chat_id: q.chat_id.clone(),
                index: q.index,
                origin: q.origin,
            })?;
        per.entry(q.direction)
            .or_default()
            .entry(q.origin)
            .or_default()
            .record(p.predicted_label, e.label);
    }
    let directions = per
        .into_iter()
        .map(|(d, m)| Ok((d, MetricsReport::from_per_origin(m)?)))
        .collect::<Result<_, EvalError>>()?;
    Ok(EvalReport { directions })
}

type Column = fn(&MetricsReport) -> Percent;

impl EvalReport {
    /// Aligned-text tables: accuracies with baselines, F/P/R, and per-origin
    /// confusion matrices (rows actual, columns predicted).
    pub fn render_text(&self) -> String {
        let dirs: Vec<_> = self.directions.keys().copied().collect();
        let mut s = String::new();
        let _ = writeln!(s, "Accuracy");
        let _ = write!(s, "{:<16}", "");
        for d in &dirs {
            let _ = write!(s, "{:>10}", d.as_str());
        }
        let _ = writeln!(s);
        let rows: [(&str, Column); 3] = [
            ("Majority class", |r| r.baselines.majority),
            ("Minority class", |r| r.baselines.minority),
            ("Error detector", |r| r.accuracy),
        ];
        for (name, get) in rows {
            let _ = write!(s, "{name:<16}");
            for d in &dirs {
                let _ = write!(s, "{:>10}", get(&self.directions[d]));
            }
            let _ = writeln!(s);
        }

        let _ = writeln!(s);
        let _ = writeln!(s, "{:<8} {:>7} {:>7} {:>7}", "", "F", "Pre", "Rec");
        for (d, r) in &self.directions {
            let _ = writeln!(
                s,
                "{:<8} {:>7} {:>7} {:>7}",
                d.as_str(),
                r.f1,
                r.precision,
                r.recall
            );
        }

        for (d, r) in &self.directions {
            let _ = writeln!(s);
            let _ = writeln!(s, "Confusion matrix {d} (rows actual, columns predicted)");
            for (o, cm) in &r.per_origin {
                let _ = writeln!(s, "  {}", o.as_str());
                let _ = writeln!(s, "  {:<10} {:>9} {:>9}", "", "Correct", "Erroneous");
                let _ = writeln!(s, "  {:<10} {:>9} {:>9}", "Correct", cm.tn, cm.fp);
                let _ = writeln!(s, "  {:<10} {:>9} {:>9}", "Erroneous", cm.fn_, cm.tp);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Correct as C, Erroneous as E};

    #[test]
    fn all_correct_predictions() {
        let cm = confusion_from_labels(&[C; 5], &[C; 5]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(0, 0, 0, 5));
    }

    #[test]
    fn one_per_cell() {
        let cm = confusion_from_labels(&[E, E, C, C], &[E, C, E, C]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(1, 1, 1, 1));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            confusion_from_labels(&[E], &[E, C]),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn zero_denominators() {
        let p = prf(&ConfusionMatrix::new(0, 0, 0, 9));
        assert_eq!(p.precision, Percent::default());
        assert_eq!(p.recall, Percent::default());
        assert_eq!(p.f1, Percent::default());
        assert!(accuracy(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn balanced_baselines() {
        let b = baseline_accuracies(&[C, E, C, E]).unwrap();
        assert_eq!(b.majority.to_string(), "50.00");
        assert_eq!(b.minority.to_string(), "50.00");
        assert!(baseline_accuracies(&[]).is_err());
    }

    #[test]
    fn cm_serializes_fn_field() {
        let s = serde_json::to_string(&ConfusionMatrix::new(1, 2, 3, 4)).unwrap();
        assert_eq!(s, r#"{"tp":1,"fp":2,"fn":3,"tn":4}"#);
    }
}

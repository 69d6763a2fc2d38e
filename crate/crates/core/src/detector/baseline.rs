use super::{DetectorError, ErrorDetector, Prediction};
use crate::corpus::{ChatQuad, Label};

/// Predicts the same label for every input, e.g. the majority class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantDetector(pub Label);

impl ErrorDetector for ConstantDetector {
    fn predict(&self, _quad: &ChatQuad) -> Result<Prediction, DetectorError> {
        let p = if self.0.is_erroneous() { 1.0 } else { 0.0 };
        Ok(Prediction::from_probability(p, 0.5))
    }

    fn threshold(&self) -> f64 {
        0.5
    }
}

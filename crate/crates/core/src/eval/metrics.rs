//! Confusion counts and the four classification metrics, with fake
//! (label 1) as the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(predicted: &[u8], truth: &[u8]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::shape(truth.len(), predicted.len()));
        }
        let mut m = Self::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p == 1, t == 1) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, true) => m.fn_ += 1,
                (false, false) => m.tn += 1,
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Fractions in `[0, 1]`. `degenerate` is set when any ratio was 0/0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub degenerate: bool,
}

pub fn compute_metrics(c: &ConfusionMatrix) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let mut degenerate = false;
    let mut ratio = |num: f64, den: f64| {
        if den == 0.0 {
            degenerate = true;
            0.0
        } else {
            num / den
        }
    };
    let precision = ratio(c.tp as f64, (c.tp + c.fp) as f64);
    let recall = ratio(c.tp as f64, (c.tp + c.fn_) as f64);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    let accuracy = (c.tp + c.tn) as f64 / total as f64;
    Ok(Metrics { precision, recall, f1, accuracy, degenerate })
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let m = compute_metrics(&ConfusionMatrix { tp: 1, tn: 1, fp: 0, fn_: 0 }).unwrap();
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy, m.degenerate), (1.0, 1.0, 1.0, 1.0, false));
    }

    #[test]
    fn no_positive_predictions() {
        let m = compute_metrics(&ConfusionMatrix { tp: 0, fp: 0, fn_: 3, tn: 2 }).unwrap();
        assert_eq!(m.precision, 0.0);
        assert!(m.degenerate);
        assert_eq!(m.accuracy, 0.4);
    }

    #[test]
    fn empty() {
        assert!(matches!(compute_metrics(&ConfusionMatrix::default()), Err(Error::EmptyEvaluation)));
    }

    #[test]
    fn bilstm_row_f1() {
        let f1 = f1_from(0.71, 0.77);
        assert!((f1 - 0.7388).abs() < 1e-4);
        assert_eq!((f1 * 100.0).round(), 74.0);
    }
}

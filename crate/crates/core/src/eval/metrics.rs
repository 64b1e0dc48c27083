use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tp: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted: bool, label: bool) {
        match (predicted, label) {
            (false, false) => self.tn += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (true, true) => self.tp += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn metrics(&self) -> MetricsReport {
        MetricsReport::from_confusion(self)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Rates in `[0, 1]`; `None` when the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fpr: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_score: Option<f64>,
}

impl MetricsReport {
    pub fn from_confusion(c: &ConfusionMatrix) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f_score = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        Self {
            fpr: ratio(c.fp, c.fp + c.tn),
            precision,
            recall,
            f_score,
        }
    }
}

pub fn score(predictions: &[bool], labels: &[bool]) -> Result<(ConfusionMatrix, MetricsReport)> {
    if predictions.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionMatrix::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        c.record(p, l);
    }
    Ok((c, c.metrics()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(tn: u64, fp: u64, fn_: u64, tp: u64) -> ConfusionMatrix {
        ConfusionMatrix { tn, fp, fn_, tp }
    }

    #[test]
    fn perfect_detector() {
        let labels = [true, false, true, false, false, true, false, false, true, false];
        let (c, m) = score(&labels, &labels).unwrap();
        assert_eq!(c.total(), 10);
        assert_eq!(m.precision, Some(1.0));
        assert_eq!(m.recall, Some(1.0));
        assert_eq!(m.fpr, Some(0.0));
        assert_eq!(cm(500, 0, 0, 100).metrics().f_score, Some(1.0));
    }

    #[test]
    fn hand_computed() {
        let m = cm(290, 1, 3, 30).metrics();
        assert!((m.precision.unwrap() - 30.0 / 31.0).abs() < 1e-12);
        assert!((m.recall.unwrap() - 30.0 / 33.0).abs() < 1e-12);
        assert!((m.f_score.unwrap() - 0.9375).abs() < 1e-12);
        assert!((m.fpr.unwrap() - 1.0 / 291.0).abs() < 1e-12);
    }

    #[test]
    fn undefined_metrics() {
        let m = cm(10, 0, 0, 0).metrics();
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, None);
        assert_eq!(m.f_score, None);
        assert_eq!(m.fpr, Some(0.0));
        assert_eq!(cm(0, 0, 0, 0).metrics().fpr, None);
    }

    #[test]
    fn length_mismatch() {
        assert!(score(&[true], &[true, false]).is_err());
    }
}

//! Classification metrics.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Accuracy,
    MicroF1,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::MicroF1 => "micro_f1",
        }
    }
}

/// Fraction of matching class ids.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidArgument("metric inputs differ in length".into()));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("metric on empty input".into()));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Micro-averaged F1 over pooled `(node, label)` decisions. Inputs are
/// flattened row-major binary indicators; predictions are thresholded at 0.5.
pub fn micro_f1(y_true: &[f32], y_score: &[f32]) -> Result<f64> {
    if y_true.len() != y_score.len() {
        return Err(Error::InvalidArgument("metric inputs differ in length".into()));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("metric on empty input".into()));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&t, &s) in y_true.iter().zip(y_score) {
        let truth = t >= 0.5;
        let pred = s >= 0.5;
        match (truth, pred) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fneg;
    if denom == 0 {
        // no positives anywhere and none predicted: every decision is right
        return Ok(1.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_edges() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1], &[1, 0]).unwrap(), 0.0);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn micro_f1_small() {
        assert_eq!(micro_f1(&[1.0, 0.0, 1.0], &[0.9, 0.1, 0.7]).unwrap(), 1.0);
        // tp=1 fp=1 fn=1 → 2/4
        assert_eq!(micro_f1(&[1.0, 0.0, 1.0], &[0.9, 0.6, 0.2]).unwrap(), 0.5);
    }
}

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::labels::TaskKind;
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Probability floor inside the logarithm.
pub const PROB_EPS: f64 = 1e-12;

/// Softmax (single-label) or elementwise sigmoid (multi-label) of logits.
pub fn output_probabilities<T: Scalar>(logits: &Tensor2<T>, task: TaskKind) -> Tensor2<T> {
    match task {
        TaskKind::SingleLabel => crate::nn::softmax_rows(logits),
        TaskKind::MultiLabel => logits.map(|z| T::one() / (T::one() + (-z).exp())),
    }
}

/// Cross-entropy against target rows, averaged over the batch.
///
/// Returns the loss and `∂loss/∂logits`. Single-label targets are one-hot
/// rows under a softmax; multi-label targets are binary rows under
/// per-label sigmoids, summed over labels.
pub fn cross_entropy<T: Scalar>(logits: &Tensor2<T>, targets: &Tensor2<f32>, task: TaskKind) -> Result<(f64, Tensor2<T>)> {
    if logits.shape() != targets.shape() {
        return Err(Error::ShapeMismatch {
            op: "cross_entropy",
            expected: logits.shape(),
            found: targets.shape(),
        });
    }
    let b = logits.rows();
    if b == 0 {
        return Ok((0.0, logits.clone()));
    }
    let probs = output_probabilities(logits, task);
    let mut loss = 0.0;
    let mut grad = probs.clone();
    let inv_b = T::of(1.0 / b as f64);
    for (i, (&p, &y)) in probs.data().iter().zip(targets.data()).enumerate() {
        let (p, yv) = (p.f64(), y as f64);
        loss -= yv * Float::ln(p.max(PROB_EPS));
        if task == TaskKind::MultiLabel {
            loss -= (1.0 - yv) * Float::ln((1.0 - p).max(PROB_EPS));
        }
        let g = &mut grad.data_mut()[i];
        *g = (*g - T::of(yv)) * inv_b;
    }
    Ok((loss / b as f64, grad))
}

/// Per-batch stage loss: targets are ground truth on `L_0` and hard pseudo
/// labels on `L_s \ L_0`.
#[allow(clippy::too_many_arguments)]
pub fn stage_loss<T: Scalar>(
    y_true: &Tensor2<f32>,
    y_pseudo_hard: Option<&Tensor2<f32>>,
    logits: &Tensor2<T>,
    l0: &NodeSet,
    ls: &NodeSet,
    batch: &[usize],
    task: TaskKind,
) -> Result<(f64, Tensor2<T>)> {
    let targets = stage_targets(y_true, y_pseudo_hard, l0, ls, batch)?;
    cross_entropy(logits, &targets, task)
}

/// Target rows for a batch drawn from `L_s`.
pub fn stage_targets(
    y_true: &Tensor2<f32>,
    y_pseudo_hard: Option<&Tensor2<f32>>,
    l0: &NodeSet,
    ls: &NodeSet,
    batch: &[usize],
) -> Result<Tensor2<f32>> {
    let c = y_true.cols();
    let mut data = Vec::with_capacity(batch.len() * c);
    for &i in batch {
        if l0.contains(i) {
            data.extend_from_slice(y_true.row(i));
        } else if ls.contains(i) {
            let pseudo = y_pseudo_hard.ok_or(Error::InvalidArgument(
                "batch contains enhanced nodes but no pseudo labels were given".into(),
            ))?;
            data.extend_from_slice(pseudo.row(i));
        } else {
            return Err(Error::InvalidArgument(alloc::format!(
                "batch node {i} is outside the enhanced training set"
            )));
        }
    }
    Tensor2::from_vec(batch.len(), c, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_near_zero_loss() {
        let logits = Tensor2::<f64>::from_rows(&[&[60.0, 0.0], &[0.0, 60.0]]);
        let y = Tensor2::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let (loss, _) = cross_entropy(&logits, &y, TaskKind::SingleLabel).unwrap();
        assert!(loss < 1e-12);
    }

    #[test]
    fn uniform_prediction_is_log_c() {
        let logits = Tensor2::<f64>::zeros(3, 4);
        let mut y = Tensor2::zeros(3, 4);
        for i in 0..3 {
            y.set(i, i, 1.0);
        }
        let (loss, _) = cross_entropy(&logits, &y, TaskKind::SingleLabel).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn targets_respect_sets() {
        let y_true = Tensor2::from_rows(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]]);
        let pseudo = Tensor2::from_rows(&[&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let l0 = NodeSet::from(vec![0]);
        let ls = NodeSet::from(vec![0, 1]);
        let t = stage_targets(&y_true, Some(&pseudo), &l0, &ls, &[1, 0]).unwrap();
        assert_eq!(t, Tensor2::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert!(stage_targets(&y_true, Some(&pseudo), &l0, &ls, &[2]).is_err());
        assert!(stage_targets(&y_true, None, &l0, &ls, &[1]).is_err());
    }
}

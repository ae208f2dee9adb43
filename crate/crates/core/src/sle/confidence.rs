use num_traits::Float;

use crate::graph::NodeSet;
use crate::labels::TaskKind;
use crate::tensor::Tensor2;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(row: &[T]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = c;
        }
    }
    best
}

/// Mean per-label binary entropy (nats) of a row of independent probabilities.
pub fn mean_binary_entropy(row: &[f32]) -> f64 {
    if row.is_empty() {
        return 0.0;
    }
    let h: f64 = row
        .iter()
        .map(|&p| {
            let p = (p as f64).clamp(0.0, 1.0);
            let term = |q: f64| if q > 0.0 { -q * Float::ln(q) } else { 0.0 };
            term(p) + term(1.0 - p)
        })
        .sum();
    h / row.len() as f64
}

/// Confident nodes among `eligible`.
///
/// Single-label: `max_c ŷ_ic ≥ threshold`. Multi-label: mean per-label binary
/// entropy `< threshold`.
pub fn filter_confident(y_soft: &Tensor2<f32>, threshold: f64, task: TaskKind, eligible: &NodeSet) -> NodeSet {
    eligible
        .iter()
        .copied()
        .filter(|&i| {
            let row = y_soft.row(i);
            match task {
                TaskKind::SingleLabel => {
                    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                    max as f64 >= threshold
                }
                TaskKind::MultiLabel => mean_binary_entropy(row) < threshold,
            }
        })
        .collect()
}

/// `L_s = L_0 ∪ confident`.
pub fn enhance_training_set(l0: &NodeSet, confident: &NodeSet) -> NodeSet {
    l0.union(confident)
}

/// Hard labels from soft predictions: row-argmax one-hot (single-label) or
/// 0.5-thresholded indicators (multi-label).
pub fn hard_labels(y_soft: &Tensor2<f32>, task: TaskKind) -> Tensor2<f32> {
    let (n, c) = y_soft.shape();
    let mut out = Tensor2::zeros(n, c);
    for i in 0..n {
        match task {
            TaskKind::SingleLabel => {
                if c > 0 {
                    out.set(i, argmax(y_soft.row(i)), 1.0);
                }
            }
            TaskKind::MultiLabel => {
                for (o, &p) in out.row_mut(i).iter_mut().zip(y_soft.row(i)) {
                    *o = if p >= 0.5 { 1.0 } else { 0.0 };
                }
            }
        }
    }
    out
}

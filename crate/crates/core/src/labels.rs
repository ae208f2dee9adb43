//! Ground-truth label containers and stage-wise initial label embeddings.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::tensor::Tensor2;

/// Initial embedding value for unknown entries of multi-label tasks.
pub const MULTI_LABEL_UNKNOWN: f32 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    SingleLabel,
    MultiLabel,
}

/// Node labels: one class id per node, or an `N × C` binary indicator matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Single { classes: Vec<usize>, num_classes: usize },
    Multi { matrix: Tensor2<f32> },
}

impl Labels {
    pub fn single(classes: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = classes.iter().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidArgument(alloc::format!(
                "class id {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Labels::Single { classes, num_classes })
    }

    pub fn multi(matrix: Tensor2<f32>) -> Result<Self> {
        if matrix.data().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument("multi-label matrix must be binary".into()));
        }
        Ok(Labels::Multi { matrix })
    }

    pub fn task(&self) -> TaskKind {
        match self {
            Labels::Single { .. } => TaskKind::SingleLabel,
            Labels::Multi { .. } => TaskKind::MultiLabel,
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            Labels::Single { classes, .. } => classes.len(),
            Labels::Multi { matrix } => matrix.rows(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Labels::Single { num_classes, .. } => *num_classes,
            Labels::Multi { matrix } => matrix.cols(),
        }
    }

    /// Dense `N × C` target matrix (one-hot rows for single-label tasks).
    pub fn to_matrix(&self) -> Tensor2<f32> {
        match self {
            Labels::Single { classes, num_classes } => {
                let mut m = Tensor2::zeros(classes.len(), *num_classes);
                for (i, &c) in classes.iter().enumerate() {
                    m.set(i, c, 1.0);
                }
                m
            }
            Labels::Multi { matrix } => matrix.clone(),
        }
    }
}

/// What is known when the stage-`s` initial label embedding is built.
#[derive(Debug, Clone, PartialEq)]
pub struct StageLabelState {
    pub stage: usize,
    /// Hard pseudo labels of the previous stage (`N × C`); required for `s ≥ 1`.
    pub hard_pseudo: Option<Tensor2<f32>>,
    /// Enhanced training set `L_s`.
    pub enhanced_set: NodeSet,
    /// Raw training set `L_0`.
    pub raw_train: NodeSet,
    pub task_kind: TaskKind,
    /// Fully inductive runs only: the confident subset of `L_0` allowed to
    /// carry its label. `None` means every raw training node does.
    pub visible_train: Option<NodeSet>,
}

/// Builds `Ȳ^(0)_s`: ground truth on `L_0`, hard pseudo labels on
/// `L_s \ L_0`, and zeros (single-label) or 0.5 (multi-label) elsewhere.
pub fn init_label_embedding(state: &StageLabelState, y: &Tensor2<f32>) -> Result<Tensor2<f32>> {
    let (n, c) = y.shape();
    let unknown = match state.task_kind {
        TaskKind::SingleLabel => 0.0,
        TaskKind::MultiLabel => MULTI_LABEL_UNKNOWN,
    };
    let mut out = Tensor2::filled(n, c, unknown);
    for &i in state.raw_train.iter() {
        if i >= n {
            return Err(Error::NodeOutOfRange { node: i, num_nodes: n });
        }
        if state.visible_train.as_ref().is_none_or(|v| v.contains(i)) {
            out.row_mut(i).copy_from_slice(y.row(i));
        }
    }
    if state.stage == 0 {
        return Ok(out);
    }
    let extra = state.enhanced_set.difference(&state.raw_train);
    if extra.is_empty() {
        return Ok(out);
    }
    let pseudo = state
        .hard_pseudo
        .as_ref()
        .ok_or(Error::InvalidArgument("stage >= 1 needs hard pseudo labels".into()))?;
    if pseudo.shape() != (n, c) {
        return Err(Error::ShapeMismatch {
            op: "init_label_embedding",
            expected: (n, c),
            found: pseudo.shape(),
        });
    }
    for &i in extra.iter() {
        out.row_mut(i).copy_from_slice(pseudo.row(i));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y() -> Tensor2<f32> {
        // nodes 0,1 labelled; 2,3 unlabelled (zero rows, as the ground truth is hidden)
        Tensor2::from_rows(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0],
        ])
    }

    fn state(stage: usize, enhanced: &[usize], pseudo: Option<Tensor2<f32>>) -> StageLabelState {
        StageLabelState {
            stage,
            hard_pseudo: pseudo,
            enhanced_set: NodeSet::from(enhanced.to_vec()),
            raw_train: NodeSet::from(vec![0, 1]),
            task_kind: TaskKind::SingleLabel,
            visible_train: None,
        }
    }

    #[test]
    fn stage_zero_is_ground_truth() {
        assert_eq!(init_label_embedding(&state(0, &[0, 1], None), &y()).unwrap(), y());
    }

    #[test]
    fn no_confident_nodes_keeps_ground_truth() {
        let pseudo = Tensor2::filled(4, 3, 0.0);
        assert_eq!(init_label_embedding(&state(1, &[0, 1], Some(pseudo)), &y()).unwrap(), y());
    }

    #[test]
    fn one_confident_node_gets_pseudo_label() {
        let mut pseudo = Tensor2::zeros(4, 3);
        pseudo.set(3, 2, 1.0);
        // a pseudo label on a raw training node must never override the truth
        pseudo.set(0, 1, 1.0);
        let out = init_label_embedding(&state(1, &[0, 1, 3], Some(pseudo)), &y()).unwrap();
        let mut expected = y();
        expected.set(3, 2, 1.0);
        assert_eq!(out, expected);
    }

    #[test]
    fn missing_pseudo_labels_error() {
        assert!(init_label_embedding(&state(1, &[0, 1, 2], None), &y()).is_err());
    }

    #[test]
    fn multi_label_unknown_is_half() {
        let mut s = state(0, &[0, 1], None);
        s.task_kind = TaskKind::MultiLabel;
        let out = init_label_embedding(&s, &y()).unwrap();
        assert_eq!(out.row(2), &[0.5, 0.5, 0.5]);
        assert_eq!(out.row(0), y().row(0));
    }

    #[test]
    fn hidden_train_rows_in_fully_inductive_mode() {
        let mut s = state(0, &[0, 1], None);
        s.visible_train = Some(NodeSet::from(vec![1]));
        let out = init_label_embedding(&s, &y()).unwrap();
        assert_eq!(out.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(out.row(1), y().row(1));
    }
}

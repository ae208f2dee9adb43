use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSplit, Setting, TransitionKind, TransitionMatrix};
use crate::propagation::{propagate_features, HopFeatures};
use crate::tensor::Tensor2;

/// Transition operator restricted to the raw training graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainView {
    pub transition: TransitionMatrix,
    pub old_to_new: Vec<Option<usize>>,
    pub new_to_old: Vec<usize>,
}

/// Which operator each role propagates over.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationPlan {
    /// Full graph: every inference, and training rows of non-`L_0` nodes.
    pub full: TransitionMatrix,
    /// Inductive only: training rows of `L_0` nodes come from this operator.
    pub train: Option<TrainView>,
    /// No edge joins the training set to the rest of the graph.
    pub fully_inductive: bool,
}

impl PropagationPlan {
    /// The label model is skipped at stage 0 when labels can only spread
    /// inside the training graph.
    pub fn label_model_at_stage0(&self) -> bool {
        self.train.is_none()
    }
}

pub fn apply_inductive_rules(graph: &Graph, split: &NodeSplit, kind: TransitionKind) -> Result<PropagationPlan> {
    let full = graph.normalize(kind);
    match split.setting {
        Setting::Transductive => Ok(PropagationPlan {
            full,
            train: None,
            fully_inductive: false,
        }),
        Setting::Inductive => {
            let sub = split
                .train_graph
                .as_ref()
                .ok_or(Error::InvalidArgument("inductive split without a train graph".into()))?;
            Ok(PropagationPlan {
                full,
                train: Some(TrainView {
                    transition: sub.graph.normalize(kind),
                    old_to_new: sub.old_to_new.clone(),
                    new_to_old: sub.new_to_old.clone(),
                }),
                fully_inductive: !graph.crosses(&split.train),
            })
        }
    }
}

/// Plan plus the precomputed hop stacks it calls for.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub plan: PropagationPlan,
    pub hops: HopFeatures<f32>,
    /// Hops over the training graph, indexed by training-graph ids.
    pub train_hops: Option<HopFeatures<f32>>,
}

/// Propagates features once for every operator in `plan`.
pub fn prepare(plan: PropagationPlan, features: &Tensor2<f32>, k_f: usize) -> Result<Prepared> {
    let hops = propagate_features(&plan.full, features, k_f)?;
    Prepared::with_full_hops(plan, features, hops)
}

impl Prepared {
    /// Reuses an already computed (e.g. cached) full-graph hop stack.
    pub fn with_full_hops(plan: PropagationPlan, features: &Tensor2<f32>, hops: HopFeatures<f32>) -> Result<Self> {
        if hops.num_nodes() != plan.full.num_nodes() {
            return Err(Error::ShapeMismatch {
                op: "Prepared",
                expected: (plan.full.num_nodes(), hops.dim()),
                found: (hops.num_nodes(), hops.dim()),
            });
        }
        let train_hops = match &plan.train {
            Some(view) => {
                let x = features.gather_rows(&view.new_to_old);
                Some(propagate_features(&view.transition, &x, hops.k_max())?)
            }
            None => None,
        };
        Ok(Self { plan, hops, train_hops })
    }

    pub fn num_nodes(&self) -> usize {
        self.hops.num_nodes()
    }

    /// Hop rows for `nodes`. With `training` set, raw training nodes read
    /// from the training-graph stack when one exists.
    pub fn gather_hops(&self, nodes: &[usize], training: bool) -> Vec<Tensor2<f32>> {
        match (&self.train_hops, &self.plan.train, training) {
            (Some(th), Some(view), true) => th
                .hops
                .iter()
                .zip(&self.hops.hops)
                .map(|(t, f)| {
                    let mut out = Tensor2::zeros(nodes.len(), f.cols());
                    for (r, &i) in nodes.iter().enumerate() {
                        let src = match view.old_to_new[i] {
                            Some(j) => t.row(j),
                            None => f.row(i),
                        };
                        out.row_mut(r).copy_from_slice(src);
                    }
                    out
                })
                .collect(),
            _ => self.hops.hops.iter().map(|h| h.gather_rows(nodes)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeSet;

    fn path(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::from_edges(&edges, n, true, true).unwrap()
    }

    #[test]
    fn transductive_has_single_plan() {
        let g = path(4);
        let split = NodeSplit::new(&g, NodeSet::from(vec![0]), NodeSet::from(vec![1]), NodeSet::from(vec![2]), Setting::Transductive).unwrap();
        let plan = apply_inductive_rules(&g, &split, TransitionKind::RowStochastic).unwrap();
        assert!(plan.train.is_none());
        assert!(plan.label_model_at_stage0());
    }

    #[test]
    fn whole_graph_train_set_plans_coincide() {
        let g = path(4);
        let split = NodeSplit::new(&g, NodeSet::all(4), NodeSet::new(), NodeSet::new(), Setting::Inductive).unwrap();
        let plan = apply_inductive_rules(&g, &split, TransitionKind::Symmetric).unwrap();
        let view = plan.train.as_ref().unwrap();
        assert_eq!(view.transition, plan.full);
        assert!(!plan.label_model_at_stage0());
        assert!(plan.fully_inductive);
    }

    #[test]
    fn missing_train_graph_is_an_error() {
        let g = path(3);
        let mut split = NodeSplit::new(&g, NodeSet::from(vec![0]), NodeSet::new(), NodeSet::new(), Setting::Inductive).unwrap();
        split.train_graph = None;
        assert!(apply_inductive_rules(&g, &split, TransitionKind::RowStochastic).is_err());
    }
}

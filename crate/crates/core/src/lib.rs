//! Scalable hop-attention graph neural networks and staged self-label-enhanced
//! training, with no dependency on the standard library.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: compressed-row graphs, transition matrices and node splits.
//! - [`propagation`]: sparse-times-dense products and the precomputed hop stacks.
//! - [`nn`]: dense layers with hand-written backward passes and the Adam optimizer.
//! - [`model`]: the hop-attention classifier, its ablation variants and the label model.
//! - [`sle`]: confidence filtering, staged training and the inductive propagation rules.
//! - [`metrics`] and [`leakage`]: evaluation helpers.
//!
//! Enable the `parallel` feature to spread SpMM and dense matmul rows over a
//! rayon pool. Row-parallel kernels keep a fixed per-row reduction order, so
//! results are bit-identical for every thread count.
#![cfg_attr(not(test), no_std)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod graph;
pub mod labels;
pub mod leakage;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod propagation;
pub mod scalar;
pub mod sle;
pub mod tensor;

mod par;

pub use error::{Error, Result};
pub use graph::{Graph, NodeSet, NodeSplit, Setting, TransitionKind, TransitionMatrix};
pub use propagation::HopFeatures;
pub use scalar::{DType, Scalar};
pub use tensor::Tensor2;

//! Dense layers with explicit forward caches and hand-derived backward passes.

mod activation;
mod adam;
mod batchnorm;
mod dropout;
mod linear;
mod mlp;
mod param;

pub use activation::{
    leaky_relu, leaky_relu_backward, leaky_relu_grad, softmax_backward, softmax_rows,
    DEFAULT_LEAKY_SLOPE,
};
pub use adam::Adam;
pub use batchnorm::{BatchNorm, BN_EPS, BN_MOMENTUM};
pub use dropout::{dropout, keep_mask, Dropout, DropoutKind, MASKED_LOGIT};
pub use linear::Linear;
pub use mlp::{Mlp, MlpConfig};
pub use param::{export_state, import_state, param_breakdown, EntryKind, Module, Parameter, StateEntry};

/// Forward-pass mode. Dropout and batch statistics are only active in `Train`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Uniform initialisation in `±1/sqrt(fan_in)`.
pub(crate) fn uniform_init<T: crate::Scalar>(
    rows: usize,
    cols: usize,
    fan_in: usize,
    rng: &mut dyn rand::RngCore,
) -> crate::Tensor2<T> {
    use rand::Rng;
    let bound = 1.0 / num_traits::Float::sqrt(fan_in.max(1) as f64);
    let data = (0..rows * cols)
        .map(|_| T::of(rng.random_range(-bound..=bound)))
        .collect();
    crate::Tensor2::from_vec(rows, cols, data).expect("init shape")
}

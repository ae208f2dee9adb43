use rand::RngCore;

use crate::error::{Error, Result};
use crate::nn::{Mlp, MlpConfig, Mode, Module, Parameter};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelModelConfig {
    pub num_classes: usize,
    pub hidden_dim: usize,
    /// Already doubled relative to the base encoders.
    pub num_layers: usize,
    pub use_batchnorm: bool,
    pub dropout: f64,
}

impl LabelModelConfig {
    /// Label-model shape for a base model whose MLPs have `base_layers` layers.
    pub fn for_base(num_classes: usize, hidden_dim: usize, base_layers: usize, use_batchnorm: bool, dropout: f64) -> Self {
        Self {
            num_classes,
            hidden_dim,
            num_layers: 2 * base_layers,
            use_batchnorm,
            dropout,
        }
    }
}

/// MLP over propagated label embeddings; its output is added to the base logits.
#[derive(Debug, Clone)]
pub struct LabelModel<T> {
    mlp: Mlp<T>,
}

impl<T: Scalar> LabelModel<T> {
    pub fn new(config: LabelModelConfig, rng: &mut dyn RngCore) -> Result<Self> {
        let mlp = Mlp::new(
            "label.mlp",
            MlpConfig {
                in_dim: config.num_classes,
                hidden_dim: config.hidden_dim,
                out_dim: config.num_classes,
                num_layers: config.num_layers,
                use_batchnorm: config.use_batchnorm,
                dropout_p: config.dropout,
                input_dropout_p: 0.0,
            },
            rng,
        )?;
        Ok(Self { mlp })
    }

    pub fn mlp(&self) -> &Mlp<T> {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp<T> {
        &mut self.mlp
    }

    pub fn num_classes(&self) -> usize {
        self.mlp.config().in_dim
    }

    pub fn forward(&mut self, rows: &Tensor2<T>, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor2<T>> {
        if rows.cols() != self.num_classes() {
            return Err(Error::ShapeMismatch {
                op: "LabelModel",
                expected: (rows.rows(), self.num_classes()),
                found: rows.shape(),
            });
        }
        self.mlp.forward(rows, mode, rng)
    }

    pub fn backward(&mut self, dlogits: &Tensor2<T>) -> Result<Tensor2<T>> {
        self.mlp.backward(dlogits)
    }

    pub fn clear_cache(&mut self) {
        self.mlp.clear_cache();
    }
}

impl<T: Scalar> Module<T> for LabelModel<T> {
    fn for_each_param(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        self.mlp.for_each_param(f)
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        self.mlp.for_each_param_mut(f)
    }

    fn for_each_buffer(&self, f: &mut dyn FnMut(&str, &Tensor2<T>)) {
        self.mlp.for_each_buffer(f)
    }

    fn for_each_buffer_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor2<T>)) {
        self.mlp.for_each_buffer_mut(f)
    }
}

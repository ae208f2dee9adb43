use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::nn::batchnorm::BatchNorm;
use crate::nn::dropout::{Dropout, DropoutKind};
use crate::nn::linear::Linear;
use crate::nn::param::{Module, Parameter};
use crate::nn::Mode;
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpConfig {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub num_layers: usize,
    pub use_batchnorm: bool,
    pub dropout_p: f64,
    pub input_dropout_p: f64,
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::InvalidArgument("MLP needs at least one layer".into()));
        }
        for p in [self.dropout_p, self.input_dropout_p] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("dropout probability {p} not in [0, 1)")));
            }
        }
        Ok(())
    }
}

/// `[input dropout] → (Linear → BatchNorm → ReLU → Dropout) × (L-1) → Linear`.
#[derive(Debug, Clone)]
pub struct Mlp<T> {
    config: MlpConfig,
    linears: Vec<Linear<T>>,
    norms: Vec<BatchNorm<T>>,
    drops: Vec<Dropout>,
    input_drop: Dropout,
    relu_masks: Vec<Option<Vec<bool>>>,
}

impl<T: Scalar> Mlp<T> {
    pub fn new(name: &str, config: MlpConfig, rng: &mut dyn RngCore) -> Result<Self> {
        config.validate()?;
        let l = config.num_layers;
        let mut linears = Vec::with_capacity(l);
        let mut norms = Vec::new();
        for i in 0..l {
            let fan_in = if i == 0 { config.in_dim } else { config.hidden_dim };
            let fan_out = if i + 1 == l { config.out_dim } else { config.hidden_dim };
            linears.push(Linear::new(&format!("{name}.linear.{i}"), fan_in, fan_out, true, rng));
            if i + 1 < l && config.use_batchnorm {
                norms.push(BatchNorm::new(&format!("{name}.bn.{i}"), fan_out));
            }
        }
        Ok(Self {
            config,
            linears,
            norms,
            drops: (0..l.saturating_sub(1))
                .map(|_| Dropout::new(config.dropout_p, DropoutKind::Standard))
                .collect(),
            input_drop: Dropout::new(config.input_dropout_p, DropoutKind::Input),
            relu_masks: alloc::vec![None; l.saturating_sub(1)],
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn linears(&self) -> &[Linear<T>] {
        &self.linears
    }

    pub fn linears_mut(&mut self) -> &mut [Linear<T>] {
        &mut self.linears
    }

    /// Makes batch normalization use running statistics even in train mode.
    pub fn freeze_batchnorm(&mut self, frozen: bool) {
        self.norms.iter_mut().for_each(|bn| bn.frozen = frozen);
    }

    pub fn forward(&mut self, x: &Tensor2<T>, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor2<T>> {
        if x.cols() != self.config.in_dim {
            return Err(Error::ShapeMismatch {
                op: "Mlp",
                expected: (x.rows(), self.config.in_dim),
                found: x.shape(),
            });
        }
        let mut h = self.input_drop.forward(x, mode, rng)?;
        let last = self.linears.len() - 1;
        for i in 0..=last {
            h = self.linears[i].forward(&h)?;
            if i == last {
                break;
            }
            if self.config.use_batchnorm {
                h = self.norms[i].forward(&h, mode)?;
            }
            let mask: Vec<bool> = h.data().iter().map(|&v| v > T::zero()).collect();
            for (v, &keep) in h.data_mut().iter_mut().zip(&mask) {
                if !keep {
                    *v = T::zero();
                }
            }
            self.relu_masks[i] = Some(mask);
            h = self.drops[i].forward(&h, mode, rng)?;
        }
        Ok(h)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, dy: &Tensor2<T>) -> Result<Tensor2<T>> {
        let last = self.linears.len() - 1;
        let mut g = self.linears[last].backward(dy)?;
        for i in (0..last).rev() {
            g = self.drops[i].backward(&g);
            let mask = self.relu_masks[i].as_ref().ok_or(Error::MissingCache("Mlp"))?;
            for (v, &keep) in g.data_mut().iter_mut().zip(mask) {
                if !keep {
                    *v = T::zero();
                }
            }
            if self.config.use_batchnorm {
                g = self.norms[i].backward(&g)?;
            }
            g = self.linears[i].backward(&g)?;
        }
        Ok(self.input_drop.backward(&g))
    }

    pub fn clear_cache(&mut self) {
        self.linears.iter_mut().for_each(Linear::clear_cache);
        self.norms.iter_mut().for_each(BatchNorm::clear_cache);
        self.drops.iter_mut().for_each(Dropout::clear_cache);
        self.input_drop.clear_cache();
        self.relu_masks.iter_mut().for_each(|m| *m = None);
    }
}

impl<T: Scalar> Module<T> for Mlp<T> {
    fn for_each_param(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        for (i, lin) in self.linears.iter().enumerate() {
            lin.for_each_param(f);
            if let Some(bn) = self.norms.get(i) {
                bn.for_each_param(f);
            }
        }
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        for (i, lin) in self.linears.iter_mut().enumerate() {
            lin.for_each_param_mut(f);
            if let Some(bn) = self.norms.get_mut(i) {
                bn.for_each_param_mut(f);
            }
        }
    }

    fn for_each_buffer(&self, f: &mut dyn FnMut(&str, &Tensor2<T>)) {
        self.norms.iter().for_each(|bn| bn.for_each_buffer(f));
    }

    fn for_each_buffer_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor2<T>)) {
        self.norms.iter_mut().for_each(|bn| bn.for_each_buffer_mut(f));
    }
}

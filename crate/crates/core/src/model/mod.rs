//! Hop-attention classifier, its ablation variants, and the label model.

mod label;
mod sagn;

pub use label::{LabelModel, LabelModelConfig};
pub use sagn::{
    attention_weights, encode_hops, fixed_hop_weights, integrate, BatchInput, Sagn, SagnConfig, Variant,
    LOGIT_CLAMP,
};

use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::nn::{Mode, Module, Parameter};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Base classifier plus an optional label model; their logits are summed.
#[derive(Debug, Clone)]
pub struct SleModel<T> {
    pub base: Sagn<T>,
    pub label: Option<LabelModel<T>>,
}

impl<T: Scalar> SleModel<T> {
    pub fn new(base: Sagn<T>, label: Option<LabelModel<T>>) -> Self {
        Self { base, label }
    }

    pub fn forward(
        &mut self,
        batch: &BatchInput<T>,
        label_rows: Option<&Tensor2<T>>,
        mode: Mode,
        rng: &mut dyn RngCore,
    ) -> Result<Tensor2<T>> {
        let mut logits = self.base.forward(batch, mode, rng)?;
        if let Some(lm) = &mut self.label {
            let rows = label_rows.ok_or(Error::InvalidArgument(
                "label model present but no propagated label rows supplied".into(),
            ))?;
            let contribution = lm.forward(rows, mode, rng)?;
            logits.add_assign(&contribution)?;
        }
        Ok(logits)
    }

    pub fn backward(&mut self, dlogits: &Tensor2<T>) -> Result<()> {
        self.base.backward(dlogits)?;
        if let Some(lm) = &mut self.label {
            lm.backward(dlogits)?;
        }
        Ok(())
    }

    pub fn clear_cache(&mut self) {
        self.base.clear_cache();
        if let Some(lm) = &mut self.label {
            lm.clear_cache();
        }
    }

    /// Parameter counts per top-level submodule (`sagn.hop`, `sagn.post`, `label.mlp`, ...).
    pub fn param_breakdown(&self) -> Vec<(alloc::string::String, usize)> {
        crate::nn::param_breakdown(self, 2)
    }
}

impl<T: Scalar> Module<T> for SleModel<T> {
    fn for_each_param(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        self.base.for_each_param(f);
        if let Some(lm) = &self.label {
            lm.for_each_param(f);
        }
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        self.base.for_each_param_mut(f);
        if let Some(lm) = &mut self.label {
            lm.for_each_param_mut(f);
        }
    }

    fn for_each_buffer(&self, f: &mut dyn FnMut(&str, &Tensor2<T>)) {
        self.base.for_each_buffer(f);
        if let Some(lm) = &self.label {
            lm.for_each_buffer(f);
        }
    }

    fn for_each_buffer_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor2<T>)) {
        self.base.for_each_buffer_mut(f);
        if let Some(lm) = &mut self.label {
            lm.for_each_buffer_mut(f);
        }
    }
}

use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::nn::Mode;
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Logit assigned to dropped hops before the softmax. Its weight underflows to
/// exactly zero whenever at least one hop of the node survives.
pub const MASKED_LOGIT: f64 = -1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutKind {
    /// Hidden activations inside an MLP.
    Standard,
    /// Raw hop-feature inputs.
    Input,
    /// Pre-softmax hop logits; dropped entries are masked, not scaled.
    Attention,
}

/// Bernoulli keep-mask with keep probability `1 - p`.
pub fn keep_mask(len: usize, p: f64, rng: &mut dyn RngCore) -> Vec<bool> {
    (0..len).map(|_| rng.random::<f64>() >= p).collect()
}

/// Stateless dropout. Returns the output and the keep-mask (`None` when the
/// call is an identity, i.e. eval mode or `p == 0`).
pub fn dropout<T: Scalar>(
    x: &Tensor2<T>,
    p: f64,
    kind: DropoutKind,
    mode: Mode,
    rng: &mut dyn RngCore,
) -> Result<(Tensor2<T>, Option<Vec<bool>>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(alloc::format!("dropout probability {p} not in [0, 1)")));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok((x.clone(), None));
    }
    let mask = keep_mask(x.data().len(), p, rng);
    let mut y = x.clone();
    match kind {
        DropoutKind::Standard | DropoutKind::Input => {
            let scale = T::of(1.0 / (1.0 - p));
            for (v, &keep) in y.data_mut().iter_mut().zip(&mask) {
                *v = if keep { *v * scale } else { T::zero() };
            }
        }
        DropoutKind::Attention => {
            for (v, &keep) in y.data_mut().iter_mut().zip(&mask) {
                if !keep {
                    *v = T::of(MASKED_LOGIT);
                }
            }
        }
    }
    Ok((y, Some(mask)))
}

/// Inverted dropout layer that remembers its mask for the backward pass.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    pub kind: DropoutKind,
    mask: Option<Vec<bool>>,
}

impl Dropout {
    pub fn new(p: f64, kind: DropoutKind) -> Self {
        Self { p, kind, mask: None }
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor2<T>, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor2<T>> {
        let (y, mask) = dropout(x, self.p, self.kind, mode, rng)?;
        self.mask = mask;
        Ok(y)
    }

    pub fn backward<T: Scalar>(&self, dy: &Tensor2<T>) -> Tensor2<T> {
        let Some(mask) = &self.mask else {
            return dy.clone();
        };
        let mut dx = dy.clone();
        match self.kind {
            DropoutKind::Attention => {
                for (v, &keep) in dx.data_mut().iter_mut().zip(mask) {
                    if !keep {
                        *v = T::zero();
                    }
                }
            }
            _ => {
                let scale = T::of(1.0 / (1.0 - self.p));
                for (v, &keep) in dx.data_mut().iter_mut().zip(mask) {
                    *v = if keep { *v * scale } else { T::zero() };
                }
            }
        }
        dx
    }

    pub fn clear_cache(&mut self) {
        self.mask = None;
    }
}

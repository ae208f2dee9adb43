use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nn::param::{Module, Parameter};
use crate::nn::Mode;
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

pub const BN_EPS: f64 = 1e-5;
/// Weight kept on the old running statistic at each update.
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-column batch normalization with learnable scale and shift.
#[derive(Debug, Clone)]
pub struct BatchNorm<T> {
    pub gamma: Parameter<T>,
    pub beta: Parameter<T>,
    running_mean: Tensor2<T>,
    running_var: Tensor2<T>,
    mean_name: String,
    var_name: String,
    /// Forces running-statistics normalisation even in train mode.
    pub frozen: bool,
    cache: Option<BnCache<T>>,
}

#[derive(Debug, Clone)]
struct BnCache<T> {
    xhat: Tensor2<T>,
    inv_std: Vec<T>,
    batch_stats: bool,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(name: &str, dim: usize) -> Self {
        Self {
            gamma: Parameter::new(format!("{name}.gamma"), Tensor2::filled(1, dim, T::one())),
            beta: Parameter::new(format!("{name}.beta"), Tensor2::zeros(1, dim)),
            running_mean: Tensor2::zeros(1, dim),
            running_var: Tensor2::filled(1, dim, T::one()),
            mean_name: format!("{name}.running_mean"),
            var_name: format!("{name}.running_var"),
            frozen: false,
            cache: None,
        }
    }

    pub fn running_mean(&self) -> &[T] {
        self.running_mean.data()
    }

    pub fn running_var(&self) -> &[T] {
        self.running_var.data()
    }

    pub fn forward(&mut self, x: &Tensor2<T>, mode: Mode) -> Result<Tensor2<T>> {
        let (n, d) = x.shape();
        if d != self.gamma.value.cols() {
            return Err(Error::ShapeMismatch {
                op: "BatchNorm",
                expected: (n, self.gamma.value.cols()),
                found: x.shape(),
            });
        }
        let eps = T::of(BN_EPS);
        let batch_stats = mode == Mode::Train && !self.frozen;
        let (mean, var): (Vec<T>, Vec<T>) = if batch_stats {
            if n < 2 {
                return Err(Error::BatchTooSmall(n));
            }
            let nt = T::of(n as f64);
            let mut mean = alloc::vec![T::zero(); d];
            for r in 0..n {
                for (m, &v) in mean.iter_mut().zip(x.row(r)) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= nt);
            let mut var = alloc::vec![T::zero(); d];
            for r in 0..n {
                for ((s, &v), &m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= nt);
            let mom = T::of(BN_MOMENTUM);
            let unbias = nt / (nt - T::one());
            for c in 0..d {
                let rm = self.running_mean.get(0, c);
                let rv = self.running_var.get(0, c);
                self.running_mean.set(0, c, mom * rm + (T::one() - mom) * mean[c]);
                self.running_var.set(0, c, mom * rv + (T::one() - mom) * var[c] * unbias);
            }
            (mean, var)
        } else {
            (self.running_mean.data().to_vec(), self.running_var.data().to_vec())
        };
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let mut xhat = x.clone();
        for r in 0..n {
            for (c, v) in xhat.row_mut(r).iter_mut().enumerate() {
                *v = (*v - mean[c]) * inv_std[c];
            }
        }
        let mut y = xhat.clone();
        let g = self.gamma.value.data();
        let b = self.beta.value.data();
        for r in 0..n {
            for (c, v) in y.row_mut(r).iter_mut().enumerate() {
                *v = *v * g[c] + b[c];
            }
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std,
            batch_stats,
        });
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor2<T>) -> Result<Tensor2<T>> {
        let cache = self.cache.as_ref().ok_or(Error::MissingCache("BatchNorm"))?;
        let (n, d) = dy.shape();
        let mut dgamma = alloc::vec![T::zero(); d];
        let mut dbeta = alloc::vec![T::zero(); d];
        for r in 0..n {
            for c in 0..d {
                dgamma[c] += dy.get(r, c) * cache.xhat.get(r, c);
                dbeta[c] += dy.get(r, c);
            }
        }
        let g = self.gamma.value.data().to_vec();
        let mut dx = Tensor2::zeros(n, d);
        if cache.batch_stats {
            // dx = inv_std/N * (N dxhat - Σ dxhat - xhat Σ(dxhat xhat)), dxhat = dy γ
            let nt = T::of(n as f64);
            let mut sum_dxhat = alloc::vec![T::zero(); d];
            let mut sum_dxhat_xhat = alloc::vec![T::zero(); d];
            for r in 0..n {
                for c in 0..d {
                    let dxh = dy.get(r, c) * g[c];
                    sum_dxhat[c] += dxh;
                    sum_dxhat_xhat[c] += dxh * cache.xhat.get(r, c);
                }
            }
            for r in 0..n {
                for c in 0..d {
                    let dxh = dy.get(r, c) * g[c];
                    let v = cache.inv_std[c] / nt
                        * (nt * dxh - sum_dxhat[c] - cache.xhat.get(r, c) * sum_dxhat_xhat[c]);
                    dx.set(r, c, v);
                }
            }
        } else {
            for r in 0..n {
                for c in 0..d {
                    dx.set(r, c, dy.get(r, c) * g[c] * cache.inv_std[c]);
                }
            }
        }
        for (gr, v) in self.gamma.grad.data_mut().iter_mut().zip(dgamma) {
            *gr += v;
        }
        for (gr, v) in self.beta.grad.data_mut().iter_mut().zip(dbeta) {
            *gr += v;
        }
        Ok(dx)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}

impl<T: Scalar> Module<T> for BatchNorm<T> {
    fn for_each_param(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        f(&self.gamma);
        f(&self.beta);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        f(&mut self.gamma);
        f(&mut self.beta);
    }

    fn for_each_buffer(&self, f: &mut dyn FnMut(&str, &Tensor2<T>)) {
        f(&self.mean_name, &self.running_mean);
        f(&self.var_name, &self.running_var);
    }

    fn for_each_buffer_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor2<T>)) {
        f(&self.mean_name, &mut self.running_mean);
        f(&self.var_name, &mut self.running_var);
    }
}

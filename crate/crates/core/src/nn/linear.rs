use alloc::format;

use crate::error::{Error, Result};
use crate::nn::param::{Module, Parameter};
use crate::nn::uniform_init;
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Affine map `y = xW + b`.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    pub weight: Parameter<T>,
    pub bias: Option<Parameter<T>>,
    input: Option<Tensor2<T>>,
}

impl<T: Scalar> Linear<T> {
    pub fn new(name: &str, in_dim: usize, out_dim: usize, bias: bool, rng: &mut dyn rand::RngCore) -> Self {
        let weight = Parameter::new(format!("{name}.weight"), uniform_init(in_dim, out_dim, in_dim, rng));
        let bias = bias.then(|| Parameter::new(format!("{name}.bias"), uniform_init(1, out_dim, in_dim, rng)));
        Self {
            weight,
            bias,
            input: None,
        }
    }

    /// Wraps explicit weights; handy for hand-computed fixtures.
    pub fn from_weights(name: &str, weight: Tensor2<T>, bias: Option<Tensor2<T>>) -> Self {
        Self {
            weight: Parameter::new(format!("{name}.weight"), weight),
            bias: bias.map(|b| Parameter::new(format!("{name}.bias"), b)),
            input: None,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&mut self, x: &Tensor2<T>) -> Result<Tensor2<T>> {
        let y = self.apply(x)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    /// Forward pass without caching the input.
    pub fn apply(&self, x: &Tensor2<T>) -> Result<Tensor2<T>> {
        let mut y = x.matmul(&self.weight.value)?;
        if let Some(b) = &self.bias {
            y.add_row_broadcast(&b.value)?;
        }
        Ok(y)
    }

    /// Accumulates `dW`, `db` and returns `dx`.
    pub fn backward(&mut self, dy: &Tensor2<T>) -> Result<Tensor2<T>> {
        let x = self.input.as_ref().ok_or(Error::MissingCache("Linear"))?;
        let dw = x.t_matmul(dy)?;
        self.weight.grad.add_assign(&dw)?;
        if let Some(b) = &mut self.bias {
            b.grad.add_assign(&dy.col_sums())?;
        }
        dy.matmul_t(&self.weight.value)
    }

    pub fn clear_cache(&mut self) {
        self.input = None;
    }
}

impl<T: Scalar> Module<T> for Linear<T> {
    fn for_each_param(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        f(&self.weight);
        if let Some(b) = &self.bias {
            f(b);
        }
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        f(&mut self.weight);
        if let Some(b) = &mut self.bias {
            f(b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights() {
        let mut l = Linear::from_weights("l", Tensor2::<f64>::identity(2), Some(Tensor2::zeros(1, 2)));
        let x = Tensor2::from_rows(&[&[1.5, -2.0], &[0.0, 3.0]]);
        assert_eq!(l.forward(&x).unwrap(), x);
    }

    #[test]
    fn hand_computed() {
        let mut l = Linear::from_weights(
            "l",
            Tensor2::<f64>::from_rows(&[&[1.0], &[1.0]]),
            Some(Tensor2::from_rows(&[&[3.0]])),
        );
        let y = l.forward(&Tensor2::from_rows(&[&[1.0, 2.0]])).unwrap();
        assert_eq!(y, Tensor2::from_rows(&[&[6.0]]));
        let dx = l.backward(&Tensor2::from_rows(&[&[1.0]])).unwrap();
        assert_eq!(dx, Tensor2::from_rows(&[&[1.0, 1.0]]));
        assert_eq!(l.weight.grad, Tensor2::from_rows(&[&[1.0], &[2.0]]));
    }

    #[test]
    fn backward_without_forward_fails() {
        let mut l = Linear::<f32>::from_weights("l", Tensor2::identity(2), None);
        assert_eq!(l.backward(&Tensor2::zeros(1, 2)), Err(Error::MissingCache("Linear")));
    }
}

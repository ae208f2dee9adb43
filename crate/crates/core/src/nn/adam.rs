use crate::nn::param::Module;
use crate::scalar::Scalar;

/// Adam with bias correction. Weight decay is folded into the gradient
/// (`g += wd · θ`) before the moment updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: i32,
}

impl Adam {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    pub fn step<T: Scalar, M: Module<T> + ?Sized>(&mut self, model: &mut M) {
        self.step += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = T::of(1.0 - num_traits::Float::powi(self.beta1, self.step));
        let c2 = T::of(1.0 - num_traits::Float::powi(self.beta2, self.step));
        let lr = T::of(self.lr);
        let eps = T::of(self.eps);
        let wd = T::of(self.weight_decay);
        model.for_each_param_mut(&mut |p| {
            let value = p.value.data_mut();
            let grad = p.grad.data();
            let m = p.adam_m.data_mut();
            let v = p.adam_v.data_mut();
            for i in 0..value.len() {
                let g = grad[i] + wd * value[i];
                m[i] = b1 * m[i] + (T::one() - b1) * g;
                v[i] = b2 * v[i] + (T::one() - b2) * g * g;
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                value[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        });
    }
}

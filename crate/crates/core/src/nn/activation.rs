use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Negative-side slope used inside attention logits.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

#[inline]
pub fn leaky_relu<T: Scalar>(x: T, slope: T) -> T {
    if x > T::zero() {
        x
    } else {
        slope * x
    }
}

/// Derivative of [`leaky_relu`]; the subgradient at 0 takes the positive branch.
#[inline]
pub fn leaky_relu_grad<T: Scalar>(x: T, slope: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        slope
    }
}

/// Backward of an elementwise LeakyReLU given its pre-activation input.
pub fn leaky_relu_backward<T: Scalar>(pre: &Tensor2<T>, dy: &Tensor2<T>, slope: T) -> Tensor2<T> {
    let mut out = dy.clone();
    for (o, &x) in out.data_mut().iter_mut().zip(pre.data()) {
        *o *= leaky_relu_grad(x, slope);
    }
    out
}

/// Row-wise numerically stable softmax.
pub fn softmax_rows<T: Scalar>(logits: &Tensor2<T>) -> Tensor2<T> {
    let mut out = logits.clone();
    let cols = out.cols();
    if cols == 0 {
        return out;
    }
    for row in out.data_mut().chunks_mut(cols) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Backward of [`softmax_rows`]: `dz = θ ⊙ (dθ − ⟨θ, dθ⟩)` per row.
pub fn softmax_backward<T: Scalar>(weights: &Tensor2<T>, dweights: &Tensor2<T>) -> Tensor2<T> {
    let mut out = Tensor2::zeros(weights.rows(), weights.cols());
    for i in 0..weights.rows() {
        let w = weights.row(i);
        let dw = dweights.row(i);
        let dot: T = w.iter().zip(dw).map(|(&a, &b)| a * b).sum();
        for ((o, &a), &b) in out.row_mut(i).iter_mut().zip(w).zip(dw) {
            *o = a * (b - dot);
        }
    }
    out
}

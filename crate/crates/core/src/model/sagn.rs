use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::nn::{
    dropout, leaky_relu, leaky_relu_grad, softmax_backward, softmax_rows, DropoutKind, Mlp, MlpConfig, Mode,
    Module, Parameter,
};
use crate::nn::uniform_init;
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Hop logits are clamped to `±LOGIT_CLAMP` before the softmax.
pub const LOGIT_CLAMP: f64 = 30.0;

/// How hop representations are combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Learned per-node softmax attention over hops.
    Attention,
    /// Fixed weights `1/(K+1)` (SAGN*).
    Uniform,
    /// Fixed weights proportional to `ratio^k`, normalised to sum to one (SAGN**).
    ExpDecay { ratio: f64 },
    /// Concatenate encoded hops and feed the post encoder (SIGN).
    Concat,
    /// Post encoder alone on a single diffused feature matrix.
    MlpOnly { hop: usize },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Attention => "attention",
            Variant::Uniform => "uniform",
            Variant::ExpDecay { .. } => "exp_decay",
            Variant::Concat => "concat",
            Variant::MlpOnly { .. } => "mlp",
        }
    }

    fn weighted_sum(&self) -> bool {
        matches!(self, Variant::Attention | Variant::Uniform | Variant::ExpDecay { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SagnConfig {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    /// `K_f`; the model consumes `K_f + 1` hop blocks.
    pub num_hops: usize,
    pub encoder_layers: usize,
    pub post_layers: usize,
    pub use_batchnorm: bool,
    pub dropout: f64,
    pub input_dropout: f64,
    pub attn_dropout: f64,
    pub leaky_slope: f64,
    pub variant: Variant,
}

impl SagnConfig {
    pub fn validate(&self) -> Result<()> {
        if let Variant::MlpOnly { hop } = self.variant {
            if hop > self.num_hops {
                return Err(Error::VariantMismatch("MLP hop index exceeds K_f"));
            }
        }
        if let Variant::ExpDecay { ratio } = self.variant {
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::InvalidArgument(format!("decay ratio {ratio} must be > 0")));
            }
        }
        if !(0.0..1.0).contains(&self.attn_dropout) {
            return Err(Error::InvalidArgument("attention dropout not in [0, 1)".into()));
        }
        Ok(())
    }

    fn encoder(&self) -> MlpConfig {
        MlpConfig {
            in_dim: self.in_dim,
            hidden_dim: self.hidden_dim,
            out_dim: self.hidden_dim,
            num_layers: self.encoder_layers,
            use_batchnorm: self.use_batchnorm,
            dropout_p: self.dropout,
            input_dropout_p: self.input_dropout,
        }
    }

    fn post(&self) -> MlpConfig {
        let (in_dim, input_dropout_p) = match self.variant {
            Variant::Concat => ((self.num_hops + 1) * self.hidden_dim, 0.0),
            Variant::MlpOnly { .. } => (self.in_dim, self.input_dropout),
            _ => (self.hidden_dim, 0.0),
        };
        MlpConfig {
            in_dim,
            hidden_dim: self.hidden_dim,
            out_dim: self.num_classes,
            num_layers: self.post_layers,
            use_batchnorm: self.use_batchnorm,
            dropout_p: self.dropout,
            input_dropout_p,
        }
    }
}

/// Per-hop feature rows for one mini-batch. `hops[0]` holds the raw features.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchInput<T> {
    pub hops: Vec<Tensor2<T>>,
    pub nodes: Vec<usize>,
}

impl<T: Scalar> BatchInput<T> {
    pub fn new(hops: Vec<Tensor2<T>>, nodes: Vec<usize>) -> Result<Self> {
        let b = nodes.len();
        let d = hops.first().map_or(0, |h| h.cols());
        for h in &hops {
            if h.rows() != b || h.cols() != d {
                return Err(Error::ShapeMismatch {
                    op: "BatchInput",
                    expected: (b, d),
                    found: h.shape(),
                });
            }
        }
        if hops.is_empty() {
            return Err(Error::InvalidArgument("batch needs at least hop 0".into()));
        }
        Ok(Self { hops, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Applies one encoder per hop: `H^(k) = ζ^(k)(X̄^(k))`.
pub fn encode_hops<T: Scalar>(
    encoders: &mut [Mlp<T>],
    hops: &[Tensor2<T>],
    mode: Mode,
    rng: &mut dyn RngCore,
) -> Result<Vec<Tensor2<T>>> {
    if encoders.len() != hops.len() {
        return Err(Error::InvalidArgument(format!(
            "{} encoders for {} hop blocks",
            encoders.len(),
            hops.len()
        )));
    }
    encoders
        .iter_mut()
        .zip(hops)
        .map(|(enc, x)| enc.forward(x, mode, rng))
        .collect()
}

/// Pre-activation hop logits `[H0_i || Hk_i] · a`, shape `B × (K+1)`.
fn attention_preacts<T: Scalar>(h: &[Tensor2<T>], a: &[T]) -> Result<Tensor2<T>> {
    let d = h[0].cols();
    if a.len() != 2 * d {
        return Err(Error::ShapeMismatch {
            op: "attention",
            expected: (2 * d, 1),
            found: (a.len(), 1),
        });
    }
    let (a_self, a_hop) = a.split_at(d);
    let b = h[0].rows();
    let mut pre = Tensor2::zeros(b, h.len());
    for i in 0..b {
        let base: T = h[0].row(i).iter().zip(a_self).map(|(&x, &w)| x * w).sum();
        for (k, hk) in h.iter().enumerate() {
            let s: T = hk.row(i).iter().zip(a_hop).map(|(&x, &w)| x * w).sum();
            pre.set(i, k, base + s);
        }
    }
    Ok(pre)
}

fn activate_logits<T: Scalar>(pre: &Tensor2<T>, slope: T) -> Tensor2<T> {
    let c = T::of(LOGIT_CLAMP);
    pre.map(|v| leaky_relu(v, slope).max(-c).min(c))
}

/// Hop attention `θ_ik = softmax_k(LeakyReLU([H0_i || Hk_i] · a))`, eval mode.
pub fn attention_weights<T: Scalar>(h: &[Tensor2<T>], a: &[T], slope: T) -> Result<Tensor2<T>> {
    if h.is_empty() {
        return Err(Error::InvalidArgument("no hop representations".into()));
    }
    let pre = attention_preacts(h, a)?;
    Ok(softmax_rows(&activate_logits(&pre, slope)))
}

/// `H_att[i] = Σ_k θ[i,k] · H^(k)[i]`.
pub fn integrate<T: Scalar>(h: &[Tensor2<T>], theta: &Tensor2<T>) -> Result<Tensor2<T>> {
    let (b, d) = h.first().map(|t| t.shape()).ok_or(Error::InvalidArgument("no hops".into()))?;
    if theta.shape() != (b, h.len()) {
        return Err(Error::ShapeMismatch {
            op: "integrate",
            expected: (b, h.len()),
            found: theta.shape(),
        });
    }
    let mut out = Tensor2::zeros(b, d);
    for (k, hk) in h.iter().enumerate() {
        for i in 0..b {
            let w = theta.get(i, k);
            for (o, &v) in out.row_mut(i).iter_mut().zip(hk.row(i)) {
                *o += w * v;
            }
        }
    }
    Ok(out)
}

/// Fixed hop weights for the non-learned variants.
pub fn fixed_hop_weights<T: Scalar>(variant: &Variant, batch: usize, num_hops: usize) -> Result<Tensor2<T>> {
    let k1 = num_hops + 1;
    let row: Vec<T> = match *variant {
        Variant::Uniform => (0..k1).map(|_| T::one() / T::of(k1 as f64)).collect(),
        Variant::ExpDecay { ratio } => {
            let raw: Vec<f64> = (0..k1).map(|k| num_traits::Float::powi(ratio, k as i32)).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|&w| T::of(w / total)).collect()
        }
        _ => return Err(Error::VariantMismatch("fixed weights only exist for uniform/exp-decay")),
    };
    let mut out = Tensor2::zeros(batch, k1);
    for i in 0..batch {
        out.row_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct Cache<T> {
    encoded: Vec<Tensor2<T>>,
    theta: Option<Tensor2<T>>,
    pre: Option<Tensor2<T>>,
    attn_mask: Option<Vec<bool>>,
    residual_input: Option<Tensor2<T>>,
}

/// Scalable hop-attention classifier and its ablation family.
#[derive(Debug, Clone)]
pub struct Sagn<T> {
    config: SagnConfig,
    encoders: Vec<Mlp<T>>,
    residual: Option<Parameter<T>>,
    post: Mlp<T>,
    attention: Option<Parameter<T>>,
    cache: Option<Cache<T>>,
}

impl<T: Scalar> Sagn<T> {
    /// Initialises every parameter from `rng`. The attention vector is drawn
    /// last so that variants share all other initial weights for a seed.
    pub fn new(config: SagnConfig, rng: &mut dyn RngCore) -> Result<Self> {
        config.validate()?;
        let mut encoders = Vec::new();
        if !matches!(config.variant, Variant::MlpOnly { .. }) {
            for k in 0..=config.num_hops {
                encoders.push(Mlp::new(&format!("sagn.hop.{k}"), config.encoder(), rng)?);
            }
        }
        let residual = config.variant.weighted_sum().then(|| {
            Parameter::new(
                "sagn.residual.weight",
                uniform_init(config.in_dim, config.hidden_dim, config.in_dim, rng),
            )
        });
        let post = Mlp::new("sagn.post", config.post(), rng)?;
        let attention = (config.variant == Variant::Attention).then(|| {
            let n = 2 * config.hidden_dim;
            Parameter::new("sagn.attention", uniform_init(n, 1, n, rng))
        });
        Ok(Self {
            config,
            encoders,
            residual,
            post,
            attention,
            cache: None,
        })
    }

    pub fn config(&self) -> &SagnConfig {
        &self.config
    }

    pub fn encoders(&self) -> &[Mlp<T>] {
        &self.encoders
    }

    pub fn encoders_mut(&mut self) -> &mut [Mlp<T>] {
        &mut self.encoders
    }

    pub fn post(&self) -> &Mlp<T> {
        &self.post
    }

    pub fn post_mut(&mut self) -> &mut Mlp<T> {
        &mut self.post
    }

    pub fn residual_mut(&mut self) -> Option<&mut Parameter<T>> {
        self.residual.as_mut()
    }

    pub fn attention_vector(&self) -> Option<&Parameter<T>> {
        self.attention.as_ref()
    }

    pub fn attention_vector_mut(&mut self) -> Option<&mut Parameter<T>> {
        self.attention.as_mut()
    }

    fn check_batch(&self, batch: &BatchInput<T>) -> Result<()> {
        let need = self.config.num_hops + 1;
        if batch.hops.len() != need {
            return Err(Error::InvalidArgument(format!(
                "model expects {need} hop blocks, batch has {}",
                batch.hops.len()
            )));
        }
        if batch.hops[0].cols() != self.config.in_dim {
            return Err(Error::ShapeMismatch {
                op: "Sagn::forward",
                expected: (batch.len(), self.config.in_dim),
                found: batch.hops[0].shape(),
            });
        }
        Ok(())
    }

    /// Logits `ξ(Σ_k Θ^(k) H^(k) + X W_r)` (or the variant's equivalent).
    pub fn forward(&mut self, batch: &BatchInput<T>, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor2<T>> {
        self.check_batch(batch)?;
        let b = batch.len();
        let mut cache = Cache {
            encoded: Vec::new(),
            theta: None,
            pre: None,
            attn_mask: None,
            residual_input: None,
        };
        let z = match self.config.variant {
            Variant::MlpOnly { hop } => batch.hops[hop].clone(),
            Variant::Concat => {
                cache.encoded = encode_hops(&mut self.encoders, &batch.hops, mode, rng)?;
                Tensor2::hcat(&cache.encoded)?
            }
            variant => {
                let h = encode_hops(&mut self.encoders, &batch.hops, mode, rng)?;
                let theta = match variant {
                    Variant::Attention => {
                        let a = self.attention.as_ref().ok_or(Error::VariantMismatch("missing attention vector"))?;
                        let pre = attention_preacts(&h, a.value.data())?;
                        let logits = activate_logits(&pre, T::of(self.config.leaky_slope));
                        let (logits, mask) =
                            dropout(&logits, self.config.attn_dropout, DropoutKind::Attention, mode, rng)?;
                        cache.pre = Some(pre);
                        cache.attn_mask = mask;
                        softmax_rows(&logits)
                    }
                    v => fixed_hop_weights(&v, b, self.config.num_hops)?,
                };
                let mut z = integrate(&h, &theta)?;
                let w_r = self.residual.as_ref().ok_or(Error::VariantMismatch("missing residual"))?;
                z.add_assign(&batch.hops[0].matmul(&w_r.value)?)?;
                cache.residual_input = Some(batch.hops[0].clone());
                cache.theta = Some(theta);
                cache.encoded = h;
                z
            }
        };
        let out = self.post.forward(&z, mode, rng)?;
        self.cache = Some(cache);
        Ok(out)
    }

    /// Eval-mode hop attention for a batch (`Attention` variant only).
    pub fn hop_attention(&mut self, batch: &BatchInput<T>, rng: &mut dyn RngCore) -> Result<Tensor2<T>> {
        if self.config.variant != Variant::Attention {
            return Err(Error::VariantMismatch("attention export needs the attention variant"));
        }
        self.check_batch(batch)?;
        let h = encode_hops(&mut self.encoders, &batch.hops, Mode::Eval, rng)?;
        let a = self.attention.as_ref().ok_or(Error::VariantMismatch("missing attention vector"))?;
        attention_weights(&h, a.value.data(), T::of(self.config.leaky_slope))
    }

    /// Accumulates gradients of every parameter given `∂loss/∂logits`.
    pub fn backward(&mut self, dlogits: &Tensor2<T>) -> Result<()> {
        let cache = self.cache.take().ok_or(Error::MissingCache("Sagn"))?;
        let dz = self.post.backward(dlogits)?;
        let dh: Vec<Tensor2<T>> = match self.config.variant {
            Variant::MlpOnly { .. } => Vec::new(),
            Variant::Concat => dz.hsplit(self.config.hidden_dim)?,
            _ => {
                let theta = cache.theta.as_ref().ok_or(Error::MissingCache("Sagn attention"))?;
                let x0 = cache.residual_input.as_ref().ok_or(Error::MissingCache("Sagn residual"))?;
                if let Some(w_r) = &mut self.residual {
                    w_r.grad.add_assign(&x0.t_matmul(&dz)?)?;
                }
                let h = &cache.encoded;
                let (b, d) = dz.shape();
                let k1 = h.len();
                let mut dh: Vec<Tensor2<T>> = (0..k1).map(|_| Tensor2::zeros(b, d)).collect();
                let mut dtheta = Tensor2::zeros(b, k1);
                for k in 0..k1 {
                    for i in 0..b {
                        let w = theta.get(i, k);
                        let g = dz.row(i);
                        let mut dot = T::zero();
                        for ((o, &gv), &hv) in dh[k].row_mut(i).iter_mut().zip(g).zip(h[k].row(i)) {
                            *o += w * gv;
                            dot += gv * hv;
                        }
                        dtheta.set(i, k, dot);
                    }
                }
                if let (Variant::Attention, Some(a)) = (self.config.variant, self.attention.as_mut()) {
                    let pre = cache.pre.as_ref().ok_or(Error::MissingCache("Sagn logits"))?;
                    let mut dlog = softmax_backward(theta, &dtheta);
                    if let Some(mask) = &cache.attn_mask {
                        for (v, &keep) in dlog.data_mut().iter_mut().zip(mask) {
                            if !keep {
                                *v = T::zero();
                            }
                        }
                    }
                    let slope = T::of(self.config.leaky_slope);
                    let c = T::of(LOGIT_CLAMP);
                    let av = a.value.data().to_vec();
                    let (a_self, a_hop) = av.split_at(d);
                    let mut da = alloc::vec![T::zero(); 2 * d];
                    for i in 0..b {
                        for k in 0..k1 {
                            let p = pre.get(i, k);
                            let act = leaky_relu(p, slope);
                            if act > c || act < -c {
                                continue;
                            }
                            let dp = dlog.get(i, k) * leaky_relu_grad(p, slope);
                            if dp == T::zero() {
                                continue;
                            }
                            for j in 0..d {
                                da[j] += dp * h[0].get(i, j);
                                da[d + j] += dp * h[k].get(i, j);
                            }
                            for (o, &w) in dh[0].row_mut(i).iter_mut().zip(a_self) {
                                *o += dp * w;
                            }
                            for (o, &w) in dh[k].row_mut(i).iter_mut().zip(a_hop) {
                                *o += dp * w;
                            }
                        }
                    }
                    for (g, v) in a.grad.data_mut().iter_mut().zip(da) {
                        *g += v;
                    }
                }
                dh
            }
        };
        for (enc, g) in self.encoders.iter_mut().zip(&dh) {
            enc.backward(g)?;
        }
        Ok(())
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
        self.encoders.iter_mut().for_each(Mlp::clear_cache);
        self.post.clear_cache();
    }
}

impl<T: Scalar> Module<T> for Sagn<T> {
    fn for_each_param(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        self.encoders.iter().for_each(|e| e.for_each_param(f));
        if let Some(r) = &self.residual {
            f(r);
        }
        self.post.for_each_param(f);
        if let Some(a) = &self.attention {
            f(a);
        }
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        self.encoders.iter_mut().for_each(|e| e.for_each_param_mut(f));
        if let Some(r) = &mut self.residual {
            f(r);
        }
        self.post.for_each_param_mut(f);
        if let Some(a) = &mut self.attention {
            f(a);
        }
    }

    fn for_each_buffer(&self, f: &mut dyn FnMut(&str, &Tensor2<T>)) {
        self.encoders.iter().for_each(|e| e.for_each_buffer(f));
        self.post.for_each_buffer(f);
    }

    fn for_each_buffer_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor2<T>)) {
        self.encoders.iter_mut().for_each(|e| e.for_each_buffer_mut(f));
        self.post.for_each_buffer_mut(f);
    }
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::TransitionKind;
use crate::labels::TaskKind;
use crate::model::Variant;
use crate::nn::DEFAULT_LEAKY_SLOPE;

/// Every knob of a staged run. Defaults follow the large product-graph
/// setting: lr 1e-3, hidden 512, two-layer MLPs, `K_f = 3`, `K_l = 9`,
/// dropouts 0.5 / 0.4 / 0.2, batch 50000, threshold 0.9, no weight decay,
/// epochs `[1000, 200, 200]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SleConfig {
    /// Number of enhancement stages `S`; stages `0..=S` are trained.
    pub num_stages: usize,
    /// `β` for single-label tasks, entropy bound `τ` for multi-label tasks.
    pub threshold: f64,
    /// Epochs for each stage, length `S + 1`.
    pub epochs: Vec<usize>,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub eval_batch_size: usize,
    pub dropout: f64,
    pub attn_dropout: f64,
    pub input_dropout: f64,
    pub k_f: usize,
    pub k_l: usize,
    pub hidden_dim: usize,
    pub encoder_layers: usize,
    pub post_layers: usize,
    pub use_batchnorm: bool,
    pub leaky_slope: f64,
    pub variant: Variant,
    pub transition: TransitionKind,
    pub self_loops: bool,
    pub use_label_model: bool,
    /// Validation metric is computed every `eval_interval` epochs and at the last one.
    pub eval_interval: usize,
    /// Stop a stage after this many evaluations without improvement.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for SleConfig {
    fn default() -> Self {
        Self {
            num_stages: 2,
            threshold: 0.9,
            epochs: vec![1000, 200, 200],
            lr: 1e-3,
            weight_decay: 0.0,
            batch_size: 50_000,
            eval_batch_size: 100_000,
            dropout: 0.5,
            attn_dropout: 0.4,
            input_dropout: 0.2,
            k_f: 3,
            k_l: 9,
            hidden_dim: 512,
            encoder_layers: 2,
            post_layers: 2,
            use_batchnorm: true,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            variant: Variant::Attention,
            transition: TransitionKind::RowStochastic,
            self_loops: true,
            use_label_model: true,
            eval_interval: 10,
            patience: None,
            seed: 0,
        }
    }
}

impl SleConfig {
    pub fn validate(&self, task: TaskKind) -> Result<()> {
        if self.epochs.len() != self.num_stages + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} stages need {} epoch entries, got {}",
                self.num_stages,
                self.num_stages + 1,
                self.epochs.len()
            )));
        }
        let upper = match task {
            TaskKind::SingleLabel => 1.0,
            TaskKind::MultiLabel => core::f64::consts::LN_2,
        };
        if !(self.threshold > 0.0 && self.threshold < upper) {
            return Err(Error::InvalidArgument(format!(
                "threshold {} outside (0, {upper})",
                self.threshold
            )));
        }
        if self.batch_size == 0 || self.eval_batch_size == 0 || self.eval_interval == 0 {
            return Err(Error::InvalidArgument("batch sizes and eval interval must be positive".into()));
        }
        if self.use_label_model && self.k_l == 0 {
            return Err(Error::InvalidArgument("label model needs k_l >= 1".into()));
        }
        if self.encoder_layers == 0 || self.post_layers == 0 {
            return Err(Error::InvalidArgument("MLPs need at least one layer".into()));
        }
        for p in [self.dropout, self.attn_dropout, self.input_dropout] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("dropout {p} not in [0, 1)")));
            }
        }
        Ok(())
    }
}

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::confidence::{argmax, enhance_training_set, filter_confident, hard_labels};
use super::config::SleConfig;
use super::inductive::Prepared;
use super::loss::{output_probabilities, stage_loss};
use crate::error::{Error, Result};
use crate::graph::{NodeSet, NodeSplit};
use crate::labels::{init_label_embedding, Labels, StageLabelState, TaskKind};
use crate::metrics::{accuracy, micro_f1};
use crate::model::{BatchInput, LabelModel, LabelModelConfig, Sagn, SagnConfig, SleModel};
use crate::nn::{Adam, Mode, Module};
use crate::propagation::propagate_labels;
use crate::tensor::Tensor2;

/// One metrics line: `{stage, epoch, split, metric, value, wall_ms}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub stage: usize,
    pub epoch: usize,
    pub split: &'static str,
    pub metric: &'static str,
    pub value: f64,
    pub wall_ms: u64,
}

/// Receives progress from a run. `now_ms` feeds the `wall_ms` fields.
pub trait Observer {
    fn record(&mut self, record: MetricRecord);

    fn now_ms(&mut self) -> u64 {
        0
    }
}

pub struct NullObserver;

impl Observer for NullObserver {
    fn record(&mut self, _record: MetricRecord) {}
}

impl Observer for Vec<MetricRecord> {
    fn record(&mut self, record: MetricRecord) {
        self.push(record);
    }
}

/// Propagated label rows for the label model.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelInputs {
    /// Over the full graph, `N × C`.
    pub full: Tensor2<f32>,
    /// Over the training graph (inductive only), indexed by training-graph ids.
    pub train: Option<Tensor2<f32>>,
}

/// Everything `train_stage` needs for stage `s`.
pub struct StageContext<'a> {
    pub stage: usize,
    pub prepared: &'a Prepared,
    pub labels: &'a Labels,
    pub split: &'a NodeSplit,
    pub enhanced: NodeSet,
    pub confident: NodeSet,
    /// Hard pseudo labels of the previous stage; required for `s ≥ 1`.
    pub pseudo: Option<&'a Tensor2<f32>>,
    /// `None` trains the base model alone.
    pub label_inputs: Option<LabelInputs>,
    pub label_init: Option<Tensor2<f32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageMetrics {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
    pub best_epoch: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct StageState {
    pub stage: usize,
    pub model: SleModel<f32>,
    pub enhanced: NodeSet,
    pub confident: NodeSet,
    /// `Ŷ_s` on every node.
    pub soft: Tensor2<f32>,
    /// `Ỹ_s`, one-hot (single-label) or thresholded (multi-label).
    pub hard: Tensor2<f32>,
    pub label_init: Option<Tensor2<f32>>,
    pub label_inputs: Option<LabelInputs>,
    pub metrics: StageMetrics,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SleRun {
    pub stages: Vec<StageState>,
}

impl SleRun {
    pub fn last(&self) -> &StageState {
        self.stages.last().expect("run has at least stage 0")
    }
}

/// Independent RNG stream per `(seed, stage, stream)`.
pub fn stage_seed(seed: u64, stage: usize, stream: u64) -> u64 {
    let mut z = seed ^ (stage as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn build_model(
    config: &SleConfig,
    in_dim: usize,
    num_classes: usize,
    with_label: bool,
    rng: &mut dyn RngCore,
) -> Result<SleModel<f32>> {
    let base = Sagn::new(
        SagnConfig {
            in_dim,
            hidden_dim: config.hidden_dim,
            num_classes,
            num_hops: config.k_f,
            encoder_layers: config.encoder_layers,
            post_layers: config.post_layers,
            use_batchnorm: config.use_batchnorm,
            dropout: config.dropout,
            input_dropout: config.input_dropout,
            attn_dropout: config.attn_dropout,
            leaky_slope: config.leaky_slope,
            variant: config.variant,
        },
        rng,
    )?;
    let label = if with_label {
        let lc = LabelModelConfig::for_base(
            num_classes,
            config.hidden_dim,
            config.post_layers,
            config.use_batchnorm,
            config.dropout,
        );
        Some(LabelModel::new(lc, rng)?)
    } else {
        None
    };
    Ok(SleModel::new(base, label))
}

fn gather_label_rows(
    inputs: &LabelInputs,
    prepared: &Prepared,
    nodes: &[usize],
    training: bool,
) -> Tensor2<f32> {
    match (&inputs.train, &prepared.plan.train, training) {
        (Some(t), Some(view), true) => {
            let mut out = Tensor2::zeros(nodes.len(), inputs.full.cols());
            for (r, &i) in nodes.iter().enumerate() {
                let src = match view.old_to_new[i] {
                    Some(j) => t.row(j),
                    None => inputs.full.row(i),
                };
                out.row_mut(r).copy_from_slice(src);
            }
            out
        }
        _ => inputs.full.gather_rows(nodes),
    }
}

/// Output probabilities for `nodes`, computed on the full graph in eval mode.
pub fn predict(
    model: &mut SleModel<f32>,
    prepared: &Prepared,
    label_inputs: Option<&LabelInputs>,
    nodes: &[usize],
    task: TaskKind,
    eval_batch_size: usize,
) -> Result<Tensor2<f32>> {
    let c = model.base.config().num_classes;
    let mut out = Tensor2::zeros(nodes.len(), c);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (b, chunk) in nodes.chunks(eval_batch_size.max(1)).enumerate() {
        let batch = BatchInput::new(prepared.gather_hops(chunk, false), chunk.to_vec())?;
        let rows = label_inputs.map(|li| gather_label_rows(li, prepared, chunk, false));
        let logits = model.forward(&batch, rows.as_ref(), Mode::Eval, &mut rng)?;
        let probs = output_probabilities(&logits, task);
        let start = b * eval_batch_size.max(1);
        for r in 0..chunk.len() {
            out.row_mut(start + r).copy_from_slice(probs.row(r));
        }
    }
    model.clear_cache();
    Ok(out)
}

/// Accuracy (single-label) or micro-F1 (multi-label) of probability rows
/// `probs[r]` against the labels of `nodes[r]`.
pub fn evaluate(probs: &Tensor2<f32>, labels: &Labels, nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Ok(f64::NAN);
    }
    match labels {
        Labels::Single { classes, .. } => {
            let truth: Vec<usize> = nodes.iter().map(|&i| classes[i]).collect();
            let pred: Vec<usize> = (0..nodes.len()).map(|r| argmax(probs.row(r))).collect();
            accuracy(&truth, &pred)
        }
        Labels::Multi { matrix } => {
            let truth = matrix.gather_rows(nodes);
            micro_f1(truth.data(), probs.data())
        }
    }
}

fn metric_name(task: TaskKind) -> &'static str {
    match task {
        TaskKind::SingleLabel => "accuracy",
        TaskKind::MultiLabel => "micro_f1",
    }
}

/// Trains a fresh model on `L_s`, keeps the best validation checkpoint and
/// runs full-graph inference with it.
pub fn train_stage(ctx: StageContext<'_>, config: &SleConfig, observer: &mut dyn Observer) -> Result<StageState> {
    let s = ctx.stage;
    let task = ctx.labels.task();
    let c = ctx.labels.num_classes();
    let start_ms = observer.now_ms();
    if ctx.enhanced.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let epochs = *config
        .epochs
        .get(s)
        .ok_or(Error::InvalidArgument(alloc::format!("no epoch count for stage {s}")))?;
    let y_true = ctx.labels.to_matrix();
    let mut init_rng = ChaCha8Rng::seed_from_u64(stage_seed(config.seed, s, 0));
    let mut model = build_model(
        config,
        ctx.prepared.hops.dim(),
        c,
        ctx.label_inputs.is_some(),
        &mut init_rng,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(config.seed, s, 1));
    let mut opt = Adam::new(config.lr, config.weight_decay);
    let mut order: Vec<usize> = ctx.enhanced.as_slice().to_vec();
    let valid: Vec<usize> = ctx.split.valid.as_slice().to_vec();
    let metric = metric_name(task);

    let mut best: Option<(f64, usize, SleModel<f32>)> = None;
    let mut since_best = 0usize;
    let mut loss_history = Vec::with_capacity(epochs);

    for epoch in 1..=epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            if config.use_batchnorm && chunk.len() < 2 {
                continue;
            }
            let batch = BatchInput::new(ctx.prepared.gather_hops(chunk, true), chunk.to_vec())?;
            let rows = ctx
                .label_inputs
                .as_ref()
                .map(|li| gather_label_rows(li, ctx.prepared, chunk, true));
            model.zero_grad();
            let logits = model.forward(&batch, rows.as_ref(), Mode::Train, &mut rng)?;
            let (loss, dlogits) =
                stage_loss(&y_true, ctx.pseudo, &logits, &ctx.split.train, &ctx.enhanced, chunk, task)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    stage: s,
                    epoch,
                    seed: config.seed,
                });
            }
            model.backward(&dlogits)?;
            opt.step(&mut model);
            total += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        model.clear_cache();
        let mean = if seen > 0 { total / seen as f64 } else { 0.0 };
        loss_history.push(mean);
        let now = observer.now_ms();
        observer.record(MetricRecord {
            stage: s,
            epoch,
            split: "train",
            metric: "loss",
            value: mean,
            wall_ms: now - start_ms,
        });

        if epoch % config.eval_interval == 0 || epoch == epochs {
            let probs = predict(
                &mut model,
                ctx.prepared,
                ctx.label_inputs.as_ref(),
                &valid,
                task,
                config.eval_batch_size,
            )?;
            let value = evaluate(&probs, ctx.labels, &valid)?;
            let now = observer.now_ms();
            observer.record(MetricRecord {
                stage: s,
                epoch,
                split: "valid",
                metric,
                value,
                wall_ms: now - start_ms,
            });
            let improved = match &best {
                None => true,
                Some((b, _, _)) => value > *b || (value.is_nan() && b.is_nan()),
            };
            if improved {
                best = Some((value, epoch, model.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if config.patience.is_some_and(|p| since_best >= p) {
                    break;
                }
            }
        }
    }

    let (best_epoch, mut model) = match best {
        Some((_, e, m)) => (e, m),
        None => (0, model),
    };
    let all: Vec<usize> = (0..ctx.prepared.num_nodes()).collect();
    let soft = predict(
        &mut model,
        ctx.prepared,
        ctx.label_inputs.as_ref(),
        &all,
        task,
        config.eval_batch_size,
    )?;
    if !soft.is_finite() {
        return Err(Error::Divergence {
            stage: s,
            epoch: best_epoch,
            seed: config.seed,
        });
    }
    let hard = hard_labels(&soft, task);
    let pick = |set: &NodeSet| -> Result<f64> {
        let nodes = set.as_slice();
        evaluate(&soft.gather_rows(nodes), ctx.labels, nodes)
    };
    let mut metrics = StageMetrics {
        train: pick(&ctx.split.train)?,
        valid: pick(&ctx.split.valid)?,
        test: pick(&ctx.split.test)?,
        best_epoch,
        wall_ms: 0,
    };
    let now = observer.now_ms();
    metrics.wall_ms = now - start_ms;
    for (split, value) in [("train", metrics.train), ("valid", metrics.valid), ("test", metrics.test)] {
        observer.record(MetricRecord {
            stage: s,
            epoch: best_epoch,
            split,
            metric,
            value,
            wall_ms: metrics.wall_ms,
        });
    }
    observer.record(MetricRecord {
        stage: s,
        epoch: best_epoch,
        split: "enhanced",
        metric: "size",
        value: ctx.enhanced.len() as f64,
        wall_ms: metrics.wall_ms,
    });
    observer.record(MetricRecord {
        stage: s,
        epoch: best_epoch,
        split: "confident",
        metric: "size",
        value: ctx.confident.len() as f64,
        wall_ms: metrics.wall_ms,
    });

    Ok(StageState {
        stage: s,
        model,
        enhanced: ctx.enhanced,
        confident: ctx.confident,
        soft,
        hard,
        label_init: ctx.label_init,
        label_inputs: ctx.label_inputs,
        metrics,
        loss_history,
    })
}

/// Propagates a label embedding over the full graph and, for inductive
/// splits, over the training graph.
pub fn propagate_label_inputs(
    prepared: &Prepared,
    init: &Tensor2<f32>,
    k_l: usize,
) -> Result<LabelInputs> {
    let full = propagate_labels(&prepared.plan.full, init, k_l)?;
    let train = match &prepared.plan.train {
        Some(view) => Some(propagate_labels(&view.transition, &init.gather_rows(&view.new_to_old), k_l)?),
        None => None,
    };
    Ok(LabelInputs { full, train })
}

/// Runs stages `0..=S` over precomputed hop features.
pub fn run_sle(
    prepared: &Prepared,
    labels: &Labels,
    split: &NodeSplit,
    config: &SleConfig,
    observer: &mut dyn Observer,
) -> Result<SleRun> {
    let task = labels.task();
    config.validate(task)?;
    let n = prepared.num_nodes();
    if labels.num_nodes() != n {
        return Err(Error::ShapeMismatch {
            op: "run_sle",
            expected: (n, labels.num_classes()),
            found: (labels.num_nodes(), labels.num_classes()),
        });
    }
    let y = labels.to_matrix();
    let everyone = NodeSet::all(n);
    let mut stages: Vec<StageState> = Vec::with_capacity(config.num_stages + 1);
    for s in 0..=config.num_stages {
        let (enhanced, confident) = match stages.last() {
            None => (split.train.clone(), NodeSet::new()),
            Some(prev) => {
                let conf = filter_confident(&prev.soft, config.threshold, task, &everyone);
                (enhance_training_set(&split.train, &conf), conf)
            }
        };
        let prev = stages.last();
        let use_label = config.use_label_model && (s > 0 || prepared.plan.label_model_at_stage0());
        let (label_init, label_inputs) = if use_label {
            let visible_train = match (prev, prepared.plan.fully_inductive) {
                (Some(p), true) => Some(filter_confident(&p.soft, config.threshold, task, &split.train)),
                _ => None,
            };
            let state = StageLabelState {
                stage: s,
                hard_pseudo: prev.map(|p| p.hard.clone()),
                enhanced_set: enhanced.clone(),
                raw_train: split.train.clone(),
                task_kind: task,
                visible_train,
            };
            let init = init_label_embedding(&state, &y)?;
            let inputs = propagate_label_inputs(prepared, &init, config.k_l)?;
            (Some(init), Some(inputs))
        } else {
            (None, None)
        };
        let ctx = StageContext {
            stage: s,
            prepared,
            labels,
            split,
            enhanced,
            confident,
            pseudo: prev.map(|p| &p.hard),
            label_inputs,
            label_init,
        };
        let state = train_stage(ctx, config, observer)?;
        stages.push(state);
    }
    Ok(SleRun { stages })
}

//! Staged self-label-enhanced training.

mod confidence;
mod config;
mod inductive;
mod loss;
mod trainer;

pub use confidence::{argmax, enhance_training_set, filter_confident, hard_labels, mean_binary_entropy};
pub use config::SleConfig;
pub use inductive::{apply_inductive_rules, prepare, PropagationPlan, Prepared, TrainView};
pub use loss::{cross_entropy, output_probabilities, stage_loss, stage_targets, PROB_EPS};
pub use trainer::{
    build_model, evaluate, predict, propagate_label_inputs, run_sle, stage_seed, train_stage, LabelInputs, MetricRecord, NullObserver,
    Observer, SleRun, StageContext, StageMetrics, StageState,
};

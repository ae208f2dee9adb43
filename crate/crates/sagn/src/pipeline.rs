//! End-to-end steps behind the CLI: load data, build the propagation
//! operators and hop stacks (through the cache), train, evaluate.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use sagn_core::nn::{export_state, import_state, EntryKind, StateEntry};
use sagn_core::propagation::propagate_features_blocked;
use sagn_core::sle::{
    apply_inductive_rules, build_model, evaluate, predict, propagate_label_inputs, run_sle, stage_seed, LabelInputs,
    Prepared, PropagationPlan, SleRun,
};
use sagn_core::model::SleModel;
use sagn_core::{Graph, NodeSet, NodeSplit};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{DataSource, RunConfig};
use crate::dataset::Dataset;
use crate::error::{Result, SagnError};
use crate::graphio::{canonicalize, graph_hash, write_csr};
use crate::hops::{load_hops, save_hops, HopCacheKey};
use crate::runlog::{file_hash, DatasetInfo, JsonlLog, Manifest, StageSummary};
use crate::synth::generate_sbm;

pub const LABEL_INIT_ENTRY: &str = "label_init";

pub fn load_data(cfg: &RunConfig) -> Result<Dataset> {
    match &cfg.source {
        DataSource::Dir(dir) => Dataset::load(dir),
        DataSource::Sbm => generate_sbm(&cfg.sbm),
    }
}

/// Operators, split and hop stacks ready for training.
pub struct Setup {
    pub graph: Graph,
    pub split: NodeSplit,
    pub prepared: Prepared,
    pub key: HopCacheKey,
    /// Whether the full-graph hops came from the cache.
    pub cache_hit: bool,
}

/// Canonical graph, split and propagation operators, without hop stacks.
pub struct Operators {
    pub graph: Graph,
    pub split: NodeSplit,
    pub plan: PropagationPlan,
}

pub fn setup_operators(ds: &Dataset, cfg: &RunConfig) -> Result<Operators> {
    let graph = canonicalize(&ds.graph, cfg.symmetrize, cfg.sle.self_loops)?;
    let split = ds.split.node_split(&graph)?;
    let plan = apply_inductive_rules(&graph, &split, cfg.sle.transition)?;
    Ok(Operators { graph, split, plan })
}

/// Canonicalises the graph, builds the transition(s) and obtains the
/// full-graph hop stack, reading or writing `cfg.cache` when set.
pub fn setup(ds: &Dataset, cfg: &RunConfig) -> Result<Setup> {
    let Operators { graph, split, plan } = setup_operators(ds, cfg)?;
    let key = HopCacheKey {
        graph_hash: graph_hash(&graph),
        feature_hash: ds.feature_hash(),
        kind: cfg.sle.transition,
        k_f: cfg.sle.k_f,
    };
    let (hops, cache_hit) = match &cfg.cache {
        Some(path) if path.exists() => (load_hops(path, &key)?, true),
        _ => {
            let hops = propagate_features_blocked(&plan.full, &ds.features, cfg.sle.k_f, cfg.block_rows)?;
            if let Some(path) = &cfg.cache {
                save_hops(&hops, &key, path)?;
            }
            (hops, false)
        }
    };
    let prepared = Prepared::with_full_hops(plan, &ds.features, hops)?;
    Ok(Setup {
        graph,
        split,
        prepared,
        key,
        cache_hit,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SagnError::io(dir, e))
}

#[derive(Debug, Clone)]
pub struct PreprocessReport {
    pub cache: PathBuf,
    pub csr: PathBuf,
    pub key: HopCacheKey,
    pub seconds: f64,
}

/// Writes the canonical graph as CSR and the hop cache. The cache goes to
/// `prop.cache`, or `<run.out>/hops.bin` when unset.
pub fn preprocess(cfg: &RunConfig) -> Result<PreprocessReport> {
    let ds = load_data(cfg)?;
    create_dir(&cfg.out)?;
    let cache = cfg.cache.clone().unwrap_or_else(|| cfg.out.join("hops.bin"));
    if cache.exists() {
        fs::remove_file(&cache).map_err(|e| SagnError::io(&cache, e))?;
    }
    let mut c = cfg.clone();
    c.cache = Some(cache.clone());
    let start = Instant::now();
    let s = setup(&ds, &c)?;
    let seconds = start.elapsed().as_secs_f64();
    let csr = cfg.out.join("graph.csr");
    write_csr(&s.graph, &csr)?;
    Ok(PreprocessReport {
        cache,
        csr,
        key: s.key,
        seconds,
    })
}

/// Metadata stored in every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: BTreeMap<String, String>,
    pub stage: usize,
    pub in_dim: usize,
    pub num_classes: usize,
    pub with_label: bool,
    pub dataset_hash: String,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub run: SleRun,
    pub manifest: Manifest,
    pub out: PathBuf,
}

pub fn checkpoint_name(stage: usize) -> String {
    format!("stage{stage}.ckpt")
}

/// Runs all stages and writes `config.cfg`, `metrics.jsonl`, one checkpoint
/// per stage and `manifest.json` into `run.out`.
pub fn train(cfg: &RunConfig, command: &str) -> Result<TrainReport> {
    let ds = load_data(cfg)?;
    cfg.check_task(ds.labels.task())?;
    create_dir(&cfg.out)?;
    let config_path = cfg.out.join("config.cfg");
    fs::write(&config_path, cfg.render()).map_err(|e| SagnError::io(&config_path, e))?;

    let s = setup(&ds, cfg)?;
    let metrics_path = cfg.out.join("metrics.jsonl");
    let mut log = JsonlLog::create(&metrics_path, cfg.timing)?;
    let run = run_sle(&s.prepared, &ds.labels, &s.split, &cfg.sle, &mut log)?;
    log.finish()?;

    let config: BTreeMap<String, String> = cfg.pairs().into_iter().collect();
    // run.* keys stay out of checkpoints
    let model_config: BTreeMap<String, String> =
        config.iter().filter(|(k, _)| !k.starts_with("run.")).map(|(k, v)| (k.clone(), v.clone())).collect();
    let mut outputs = BTreeMap::new();
    let mut stages = Vec::new();
    for st in &run.stages {
        let mut entries = export_state(&st.model);
        if let Some(init) = &st.label_init {
            entries.push(StateEntry {
                name: LABEL_INIT_ENTRY.into(),
                kind: EntryKind::Buffer,
                value: init.clone(),
            });
        }
        let meta = CheckpointMeta {
            config: model_config.clone(),
            stage: st.stage,
            in_dim: ds.features.cols(),
            num_classes: ds.labels.num_classes(),
            with_label: st.model.label.is_some(),
            dataset_hash: ds.hash.clone(),
        };
        let name = checkpoint_name(st.stage);
        let path = cfg.out.join(&name);
        save_checkpoint(&path, &serde_json::to_value(&meta).expect("meta serialises"), &entries)?;
        outputs.insert(name, file_hash(&path)?);
        let finite = |v: f64| v.is_finite().then_some(v);
        stages.push(StageSummary {
            stage: st.stage,
            init_seed: stage_seed(cfg.sle.seed, st.stage, 0),
            train_seed: stage_seed(cfg.sle.seed, st.stage, 1),
            best_epoch: st.metrics.best_epoch,
            enhanced: st.enhanced.len(),
            confident: st.confident.len(),
            train: finite(st.metrics.train),
            valid: finite(st.metrics.valid),
            test: finite(st.metrics.test),
            label_model: st.model.label.is_some(),
        });
    }
    for name in ["config.cfg", "metrics.jsonl"] {
        outputs.insert(name.into(), file_hash(&cfg.out.join(name))?);
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config,
        seed: cfg.sle.seed,
        dataset: DatasetInfo {
            name: ds.name.clone(),
            hash: ds.hash.clone(),
            graph_hash: ds.graph_hash(),
            feature_hash: ds.feature_hash(),
            num_nodes: ds.num_nodes(),
            num_edges: ds.graph.num_edges(),
            num_classes: ds.labels.num_classes(),
        },
        propagation_graph_hash: s.key.graph_hash.clone(),
        stages,
        outputs,
    };
    manifest.write(&cfg.out.join("manifest.json"))?;
    Ok(TrainReport {
        run,
        manifest,
        out: cfg.out.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub stage: usize,
    pub train: Option<f64>,
    pub valid: Option<f64>,
    pub test: Option<f64>,
}

/// A checkpointed stage model together with the data it was trained on.
pub struct Restored {
    pub meta: CheckpointMeta,
    pub config: RunConfig,
    pub dataset: Dataset,
    pub setup: Setup,
    pub model: SleModel<f32>,
    pub label_inputs: Option<LabelInputs>,
}

/// Rebuilds the model stored in `checkpoint` and the dataset named by its
/// configuration. `overrides` are applied on top of the stored configuration
/// (for instance to point `data.dir` elsewhere).
pub fn restore(checkpoint: &Path, overrides: &[String]) -> Result<Restored> {
    let (meta, entries) = load_checkpoint::<f32>(checkpoint)?;
    let meta: CheckpointMeta = serde_json::from_value(meta).map_err(|e| SagnError::Json {
        file: checkpoint.to_path_buf(),
        source: e,
    })?;
    let mut cfg = RunConfig::default();
    for (k, v) in &meta.config {
        cfg.set(k, v)?;
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| SagnError::Config(format!("--set expects key=value, got {o:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.finish()?;
    let ds = load_data(&cfg)?;
    if ds.hash != meta.dataset_hash {
        return Err(SagnError::Data(format!(
            "dataset hash {} does not match the checkpoint's {}",
            ds.hash, meta.dataset_hash
        )));
    }
    let s = setup(&ds, &cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut model = build_model(&cfg.sle, meta.in_dim, meta.num_classes, meta.with_label, &mut rng)?;
    import_state(&mut model, &entries)?;
    let label_inputs = if meta.with_label {
        let init = entries
            .iter()
            .find(|e| e.name == LABEL_INIT_ENTRY)
            .ok_or_else(|| SagnError::Format {
                file: checkpoint.to_path_buf(),
                msg: "label model present but no label_init entry".into(),
            })?;
        Some(propagate_label_inputs(&s.prepared, &init.value, cfg.sle.k_l)?)
    } else {
        None
    };
    Ok(Restored {
        meta,
        config: cfg,
        dataset: ds,
        setup: s,
        model,
        label_inputs,
    })
}

/// Scores a checkpoint on its dataset's train, validation and test nodes.
pub fn eval(checkpoint: &Path, overrides: &[String]) -> Result<EvalReport> {
    let mut r = restore(checkpoint, overrides)?;
    let all: Vec<usize> = (0..r.dataset.num_nodes()).collect();
    let probs = predict(
        &mut r.model,
        &r.setup.prepared,
        r.label_inputs.as_ref(),
        &all,
        r.dataset.labels.task(),
        r.config.sle.eval_batch_size,
    )?;
    let score = |set: &NodeSet| -> Result<Option<f64>> {
        let nodes = set.as_slice();
        let v = evaluate(&probs.gather_rows(nodes), &r.dataset.labels, nodes)?;
        Ok(v.is_finite().then_some(v))
    };
    Ok(EvalReport {
        stage: r.meta.stage,
        train: score(&r.setup.split.train)?,
        valid: score(&r.setup.split.valid)?,
        test: score(&r.setup.split.test)?,
    })
}

//! `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are skipped. Every
//! key can be overridden from the command line with `--set key=value`; later
//! assignments win. Unknown keys are rejected.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `data.source` | `dir` | `dir` (load `data.dir`) or `sbm` (generate from `data.sbm.*`) |
//! | `data.dir` | | dataset directory |
//! | `data.sbm.nodes`, `.classes`, `.intra_p`, `.inter_p`, `.feature_dim`, `.noise`, `.homophily`, `.seed`, `.train_fraction`, `.valid_fraction` | 5000, 5, 0.02, 0.002, 16, 1.0, 0.9, 0, 0.1, 0.02 | SBM generator |
//! | `prop.k_f`, `prop.k_l` | 3, 9 | feature and label hops |
//! | `prop.transition` | `row` | `row` or `sym` |
//! | `prop.symmetrize`, `prop.self_loops` | true, true | graph canonicalisation |
//! | `prop.block_rows` | 8192 | SpMM row block |
//! | `prop.cache` | | hop cache file, reused when its key matches |
//! | `model.variant` | `attention` | `attention`, `uniform`, `exp_decay:<ratio>`, `concat`, `mlp_only:<hop>` |
//! | `model.hidden`, `model.encoder_layers`, `model.post_layers` | 512, 2, 2 | |
//! | `model.batchnorm` | true | |
//! | `model.dropout`, `model.attn_dropout`, `model.input_dropout` | 0.5, 0.4, 0.2 | |
//! | `model.leaky_slope` | 0.2 | |
//! | `sle.stages` | 2 | enhancement stages `S` |
//! | `sle.threshold` | 0.9 | confidence threshold |
//! | `sle.epochs` | `1000,200,200` | per stage; a short list repeats its last value, a long one is cut |
//! | `sle.label_model` | true | false gives plain self-training |
//! | `train.lr`, `train.weight_decay` | 0.001, 0 | Adam |
//! | `train.batch_size`, `train.eval_batch_size` | 50000, 100000 | |
//! | `train.eval_interval` | 10 | epochs between validation passes |
//! | `train.patience` | `none` | evaluations without improvement before stopping a stage |
//! | `train.seed` | 0 | |
//! | `run.out` | `runs/latest` | output directory |
//! | `run.threads` | 1 | worker threads; 1 is the bit-reproducible mode |
//! | `run.timing` | true | false writes `wall_ms = 0` everywhere |

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sagn_core::labels::TaskKind;
use sagn_core::model::Variant;
use sagn_core::propagation::DEFAULT_BLOCK_ROWS;
use sagn_core::sle::SleConfig;
use sagn_core::TransitionKind;

use crate::error::{Result, SagnError};
use crate::synth::SbmSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Dir(PathBuf),
    Sbm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    pub sbm: SbmSpec,
    pub symmetrize: bool,
    pub block_rows: usize,
    pub cache: Option<PathBuf>,
    pub sle: SleConfig,
    pub out: PathBuf,
    pub threads: usize,
    pub timing: bool,
    epochs_raw: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sle = SleConfig::default();
        Self {
            source: DataSource::Dir(PathBuf::new()),
            sbm: SbmSpec::default(),
            symmetrize: true,
            block_rows: DEFAULT_BLOCK_ROWS,
            cache: None,
            epochs_raw: sle.epochs.clone(),
            sle,
            out: PathBuf::from("runs/latest"),
            threads: 1,
            timing: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| SagnError::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(SagnError::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

pub fn parse_variant(value: &str) -> Result<Variant> {
    let (name, arg) = match value.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (value, None),
    };
    match (name, arg) {
        ("attention", None) => Ok(Variant::Attention),
        ("uniform", None) => Ok(Variant::Uniform),
        ("concat", None) => Ok(Variant::Concat),
        ("exp_decay", Some(r)) => Ok(Variant::ExpDecay { ratio: parse("model.variant", r)? }),
        ("mlp_only", a) => Ok(Variant::MlpOnly {
            hop: a.map(|h| parse("model.variant", h)).transpose()?.unwrap_or(0),
        }),
        _ => Err(SagnError::Config(format!(
            "model.variant: unknown variant {value:?} (attention, uniform, exp_decay:<ratio>, concat, mlp_only:<hop>)"
        ))),
    }
}

pub fn variant_name(v: Variant) -> String {
    match v {
        Variant::Attention => "attention".into(),
        Variant::Uniform => "uniform".into(),
        Variant::Concat => "concat".into(),
        Variant::ExpDecay { ratio } => format!("exp_decay:{ratio}"),
        Variant::MlpOnly { hop } => format!("mlp_only:{hop}"),
    }
}

pub fn parse_transition(value: &str) -> Result<TransitionKind> {
    match value {
        "row" => Ok(TransitionKind::RowStochastic),
        "sym" => Ok(TransitionKind::Symmetric),
        _ => Err(SagnError::Config(format!("prop.transition: expected row or sym, got {value:?}"))),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Reads `path` and applies `overrides` (each `key=value`) on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| SagnError::Config(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| SagnError::Config(format!("--set expects key=value, got {o:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.finish()?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SagnError::Config(format!("{origin}:{}: expected key = value", no + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| SagnError::Config(format!("{origin}:{}: {}", no + 1, config_msg(e))))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.sle;
        let b = &mut self.sbm;
        match key {
            "data.source" => {
                self.source = match value {
                    "sbm" => DataSource::Sbm,
                    "dir" => DataSource::Dir(match &self.source {
                        DataSource::Dir(p) => p.clone(),
                        DataSource::Sbm => PathBuf::new(),
                    }),
                    _ => return Err(SagnError::Config(format!("data.source: expected dir or sbm, got {value:?}"))),
                }
            }
            "data.dir" => {
                if let DataSource::Dir(p) = &mut self.source {
                    *p = PathBuf::from(value);
                } else {
                    self.source = DataSource::Dir(PathBuf::from(value));
                }
            }
            "data.sbm.nodes" => b.num_nodes = parse(key, value)?,
            "data.sbm.classes" => b.num_classes = parse(key, value)?,
            "data.sbm.intra_p" => b.intra_p = parse(key, value)?,
            "data.sbm.inter_p" => b.inter_p = parse(key, value)?,
            "data.sbm.feature_dim" => b.feature_dim = parse(key, value)?,
            "data.sbm.noise" => b.feature_noise_sigma = parse(key, value)?,
            "data.sbm.homophily" => b.label_homophily = parse(key, value)?,
            "data.sbm.seed" => b.seed = parse(key, value)?,
            "data.sbm.train_fraction" => b.train_fraction = parse(key, value)?,
            "data.sbm.valid_fraction" => b.valid_fraction = parse(key, value)?,
            "prop.k_f" => s.k_f = parse(key, value)?,
            "prop.k_l" => s.k_l = parse(key, value)?,
            "prop.transition" => s.transition = parse_transition(value)?,
            "prop.symmetrize" => self.symmetrize = parse_bool(key, value)?,
            "prop.self_loops" => s.self_loops = parse_bool(key, value)?,
            "prop.block_rows" => self.block_rows = parse(key, value)?,
            "prop.cache" => self.cache = (!value.is_empty()).then(|| PathBuf::from(value)),
            "model.variant" => s.variant = parse_variant(value)?,
            "model.hidden" => s.hidden_dim = parse(key, value)?,
            "model.encoder_layers" => s.encoder_layers = parse(key, value)?,
            "model.post_layers" => s.post_layers = parse(key, value)?,
            "model.batchnorm" => s.use_batchnorm = parse_bool(key, value)?,
            "model.dropout" => s.dropout = parse(key, value)?,
            "model.attn_dropout" => s.attn_dropout = parse(key, value)?,
            "model.input_dropout" => s.input_dropout = parse(key, value)?,
            "model.leaky_slope" => s.leaky_slope = parse(key, value)?,
            "sle.stages" => s.num_stages = parse(key, value)?,
            "sle.threshold" => s.threshold = parse(key, value)?,
            "sle.epochs" => {
                self.epochs_raw = value
                    .split(',')
                    .map(|e| parse(key, e.trim()))
                    .collect::<Result<Vec<usize>>>()?;
                if self.epochs_raw.is_empty() {
                    return Err(SagnError::Config("sle.epochs: empty list".into()));
                }
            }
            "sle.label_model" => s.use_label_model = parse_bool(key, value)?,
            "train.lr" => s.lr = parse(key, value)?,
            "train.weight_decay" => s.weight_decay = parse(key, value)?,
            "train.batch_size" => s.batch_size = parse(key, value)?,
            "train.eval_batch_size" => s.eval_batch_size = parse(key, value)?,
            "train.eval_interval" => s.eval_interval = parse(key, value)?,
            "train.patience" => {
                s.patience = match value {
                    "none" | "" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "train.seed" => s.seed = parse(key, value)?,
            "run.out" => self.out = PathBuf::from(value),
            "run.threads" => self.threads = parse(key, value)?,
            "run.timing" => self.timing = parse_bool(key, value)?,
            _ => return Err(SagnError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Fits the epoch list to the stage count (repeat the last entry or drop
    /// the surplus) and checks cross-key constraints.
    pub fn finish(&mut self) -> Result<()> {
        let want = self.sle.num_stages + 1;
        let last = *self.epochs_raw.last().expect("non-empty");
        let mut epochs = self.epochs_raw.clone();
        epochs.resize(want, last);
        self.sle.epochs = epochs;
        if self.threads == 0 {
            return Err(SagnError::Config("run.threads must be >= 1".into()));
        }
        if self.block_rows == 0 {
            return Err(SagnError::Config("prop.block_rows must be >= 1".into()));
        }
        if let DataSource::Dir(p) = &self.source {
            if p.as_os_str().is_empty() {
                return Err(SagnError::Config("data.dir is required when data.source = dir".into()));
            }
        }
        if self.source == DataSource::Sbm {
            self.sbm.validate()?;
        }
        Ok(())
    }

    /// Task-dependent checks once the dataset is known.
    pub fn check_task(&self, task: TaskKind) -> Result<()> {
        self.sle.validate(task).map_err(|e| SagnError::Config(e.to_string()))
    }

    /// Every key with its effective value, sorted; feeding these back through
    /// [`RunConfig::set`] reproduces the configuration.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let s = &self.sle;
        let b = &self.sbm;
        let mut v: Vec<(&str, String)> = vec![
            (
                "data.source",
                match self.source {
                    DataSource::Dir(_) => "dir".into(),
                    DataSource::Sbm => "sbm".into(),
                },
            ),
            ("data.sbm.nodes", b.num_nodes.to_string()),
            ("data.sbm.classes", b.num_classes.to_string()),
            ("data.sbm.intra_p", b.intra_p.to_string()),
            ("data.sbm.inter_p", b.inter_p.to_string()),
            ("data.sbm.feature_dim", b.feature_dim.to_string()),
            ("data.sbm.noise", b.feature_noise_sigma.to_string()),
            ("data.sbm.homophily", b.label_homophily.to_string()),
            ("data.sbm.seed", b.seed.to_string()),
            ("data.sbm.train_fraction", b.train_fraction.to_string()),
            ("data.sbm.valid_fraction", b.valid_fraction.to_string()),
            ("prop.k_f", s.k_f.to_string()),
            ("prop.k_l", s.k_l.to_string()),
            ("prop.transition", s.transition.name().into()),
            ("prop.symmetrize", self.symmetrize.to_string()),
            ("prop.self_loops", s.self_loops.to_string()),
            ("prop.block_rows", self.block_rows.to_string()),
            (
                "prop.cache",
                self.cache.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            ),
            ("model.variant", variant_name(s.variant)),
            ("model.hidden", s.hidden_dim.to_string()),
            ("model.encoder_layers", s.encoder_layers.to_string()),
            ("model.post_layers", s.post_layers.to_string()),
            ("model.batchnorm", s.use_batchnorm.to_string()),
            ("model.dropout", s.dropout.to_string()),
            ("model.attn_dropout", s.attn_dropout.to_string()),
            ("model.input_dropout", s.input_dropout.to_string()),
            ("model.leaky_slope", s.leaky_slope.to_string()),
            ("sle.stages", s.num_stages.to_string()),
            ("sle.threshold", s.threshold.to_string()),
            ("sle.epochs", join(&s.epochs)),
            ("sle.label_model", s.use_label_model.to_string()),
            ("train.lr", s.lr.to_string()),
            ("train.weight_decay", s.weight_decay.to_string()),
            ("train.batch_size", s.batch_size.to_string()),
            ("train.eval_batch_size", s.eval_batch_size.to_string()),
            ("train.eval_interval", s.eval_interval.to_string()),
            (
                "train.patience",
                s.patience.map(|p| p.to_string()).unwrap_or_else(|| "none".into()),
            ),
            ("train.seed", s.seed.to_string()),
            ("run.out", self.out.display().to_string()),
            ("run.threads", self.threads.to_string()),
            ("run.timing", self.timing.to_string()),
        ];
        if let DataSource::Dir(p) = &self.source {
            v.push(("data.dir", p.display().to_string()));
        }
        let mut out: Vec<(String, String)> = v.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        out.sort();
        out
    }

    /// The configuration as a config file.
    pub fn render(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn config_msg(e: SagnError) -> String {
    match e {
        SagnError::Config(m) => m,
        other => other.to_string(),
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sagn::attention::export_attention;
use sagn::config::RunConfig;
use sagn::pipeline::{self, load_data};
use sagn::synth::{generate_sbm, SbmSpec};
use sagn::{Result, SagnError};
use sagn_core::leakage::{leakage_probe, ProbeConfig};

#[derive(Parser)]
#[command(name = "sagn", version, about = "Hop-attention GNN with staged self-label-enhanced training")]
struct Cli {
    /// Worker threads; 1 is the bit-reproducible mode. Overrides run.threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set sle.stages=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the transition matrix and hop cache.
    Preprocess(ConfigArgs),
    /// Run all stages; writes checkpoints, metrics.jsonl and manifest.json.
    Train(ConfigArgs),
    /// Score a stage checkpoint on its dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Write a synthetic stochastic-block-model dataset directory.
    GenSbm {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        nodes: usize,
        #[arg(long, default_value_t = 5)]
        classes: usize,
        #[arg(long, default_value_t = 0.02)]
        intra_p: f64,
        #[arg(long, default_value_t = 0.002)]
        inter_p: f64,
        #[arg(long, default_value_t = 16)]
        feature_dim: usize,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.9)]
        homophily: f64,
        #[arg(long, default_value_t = 0.10)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0.02)]
        valid_fraction: f64,
    },
    /// Export per-node hop attention of a checkpoint as CSV.
    ExportAttn {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated node ids; all nodes when omitted.
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<usize>>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Train a label-only probe on propagated training labels and report
    /// the train/validation gap per label depth.
    LeakageProbe {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long = "k-l", value_delimiter = ',', default_value = "1,9")]
        k_l: Vec<usize>,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
    },
}

fn init_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(SagnError::Config("--threads must be >= 1".into()));
    }
    // A second initialisation in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load_config(args: &ConfigArgs, threads: Option<usize>) -> Result<RunConfig> {
    let path = args
        .config
        .as_deref()
        .ok_or_else(|| SagnError::Config("--config <file> is required".into()))?;
    if !Path::new(path).is_file() {
        return Err(SagnError::Config(format!("config file {} not found", path.display())));
    }
    let mut cfg = RunConfig::load(Some(path), &args.set)?;
    if let Some(t) = threads {
        cfg.threads = t;
    }
    init_threads(cfg.threads)?;
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    match cli.command {
        Command::Preprocess(args) => {
            let cfg = load_config(&args, threads)?;
            let r = pipeline::preprocess(&cfg)?;
            print_json(&json!({
                "cache": r.cache,
                "csr": r.csr,
                "graph_hash": r.key.graph_hash,
                "feature_hash": r.key.feature_hash,
                "transition": r.key.kind.name(),
                "k_f": r.key.k_f,
                "seconds": r.seconds,
            }));
        }
        Command::Train(args) => {
            let cfg = load_config(&args, threads)?;
            let command = std::env::args().collect::<Vec<_>>().join(" ");
            let r = pipeline::train(&cfg, &command)?;
            for s in &r.manifest.stages {
                eprintln!(
                    "stage {}: |L_s| = {:>6}  train {:.4}  valid {:.4}  test {:.4}",
                    s.stage,
                    s.enhanced,
                    s.train.unwrap_or(f64::NAN),
                    s.valid.unwrap_or(f64::NAN),
                    s.test.unwrap_or(f64::NAN)
                );
            }
            eprintln!("wrote {}", r.out.display());
        }
        Command::Eval { checkpoint, set } => {
            init_threads(threads.unwrap_or(1))?;
            let r = pipeline::eval(&checkpoint, &set)?;
            print_json(&serde_json::to_value(r).expect("json"));
        }
        Command::GenSbm {
            out,
            seed,
            nodes,
            classes,
            intra_p,
            inter_p,
            feature_dim,
            noise,
            homophily,
            train_fraction,
            valid_fraction,
        } => {
            let spec = SbmSpec {
                num_nodes: nodes,
                num_classes: classes,
                intra_p,
                inter_p,
                feature_dim,
                feature_noise_sigma: noise,
                label_homophily: homophily,
                seed,
                train_fraction,
                valid_fraction,
            };
            let ds = generate_sbm(&spec)?;
            ds.save(&out)?;
            print_json(&json!({
                "out": out,
                "hash": ds.hash,
                "num_nodes": ds.num_nodes(),
                "num_edges": ds.graph.num_edges(),
            }));
        }
        Command::ExportAttn {
            checkpoint,
            out,
            nodes,
            set,
        } => {
            init_threads(threads.unwrap_or(1))?;
            let mut r = pipeline::restore(&checkpoint, &set)?;
            let n = r.dataset.num_nodes();
            let nodes = nodes.unwrap_or_else(|| (0..n).collect());
            if let Some(&bad) = nodes.iter().find(|&&i| i >= n) {
                return Err(SagnError::Data(format!("node {bad} out of range for {n} nodes")));
            }
            export_attention(&mut r.model.base, &r.setup.prepared.hops, &nodes, &out)?;
            eprintln!("wrote {} rows to {}", nodes.len(), out.display());
        }
        Command::LeakageProbe { cfg, k_l, epochs, lr } => {
            let cfg = load_config(&cfg, threads)?;
            let ds = load_data(&cfg)?;
            let s = pipeline::setup_operators(&ds, &cfg)?;
            for k in k_l {
                let r = leakage_probe(
                    &s.plan.full,
                    &ds.labels,
                    &s.split.train,
                    &s.split.valid,
                    k,
                    ProbeConfig { epochs, lr },
                )?;
                println!(
                    "{}",
                    json!({
                        "k_l": r.k_l,
                        "train_self_mass": r.train_self_mass,
                        "train_acc": r.train_acc,
                        "val_acc": r.val_acc,
                        "gap": r.gap(),
                    })
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Metrics log (JSON lines) and run manifest.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sagn_core::sle::{MetricRecord, Observer};

use crate::error::{Result, SagnError};

/// Serialised form of one [`MetricRecord`]; NaN values become `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricLine {
    pub stage: usize,
    pub epoch: usize,
    pub split: String,
    pub metric: String,
    pub value: Option<f64>,
    pub wall_ms: u64,
}

impl From<&MetricRecord> for MetricLine {
    fn from(r: &MetricRecord) -> Self {
        Self {
            stage: r.stage,
            epoch: r.epoch,
            split: r.split.into(),
            metric: r.metric.into(),
            value: r.value.is_finite().then_some(r.value),
            wall_ms: r.wall_ms,
        }
    }
}

/// Writes every record as one JSON line. With timing disabled all `wall_ms`
/// fields are zero, which makes two runs byte-comparable.
pub struct JsonlLog {
    out: BufWriter<File>,
    path: PathBuf,
    clock: Option<Instant>,
    error: Option<std::io::Error>,
}

impl JsonlLog {
    pub fn create(path: &Path, timing: bool) -> Result<Self> {
        let file = File::create(path).map_err(|e| SagnError::io(path, e))?;
        Ok(Self {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
            clock: timing.then(Instant::now),
            error: None,
        })
    }

    pub fn finish(mut self) -> Result<()> {
        if let Some(e) = self.error.take() {
            return Err(SagnError::io(&self.path, e));
        }
        self.out.flush().map_err(|e| SagnError::io(&self.path, e))
    }
}

impl Observer for JsonlLog {
    fn record(&mut self, record: MetricRecord) {
        if self.error.is_some() {
            return;
        }
        let line = serde_json::to_string(&MetricLine::from(&record)).expect("metric line serialises");
        if let Err(e) = writeln!(self.out, "{line}") {
            self.error = Some(e);
        }
    }

    fn now_ms(&mut self) -> u64 {
        self.clock.map(|c| c.elapsed().as_millis() as u64).unwrap_or(0)
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricLine>> {
    let text = std::fs::read_to_string(path).map_err(|e| SagnError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SagnError::Parse {
                file: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub hash: String,
    pub graph_hash: String,
    pub feature_hash: String,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: usize,
    pub init_seed: u64,
    pub train_seed: u64,
    pub best_epoch: usize,
    pub enhanced: usize,
    pub confident: usize,
    pub train: Option<f64>,
    pub valid: Option<f64>,
    pub test: Option<f64>,
    pub label_model: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    /// Effective configuration, one entry per key.
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub dataset: DatasetInfo,
    /// Canonicalised graph the transition was built from.
    pub propagation_graph_hash: String,
    pub stages: Vec<StageSummary>,
    /// File name (relative to the manifest) to SHA-256.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| SagnError::Json {
            file: path.to_path_buf(),
            source: e,
        })?;
        std::fs::write(path, json + "\n").map_err(|e| SagnError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SagnError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| SagnError::Json {
            file: path.to_path_buf(),
            source: e,
        })
    }
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| SagnError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

//! Dataset directories.
//!
//! ```text
//! edges.tsv     edge list (see graphio)
//! features.bin  "SGNF" | u32 version | u64 N | u64 d | u8 dtype | N*d values, row-major
//! labels.tsv    header `task<TAB>single|multi<TAB>classes<TAB>C`, then `node<TAB>label`
//!               lines; multi-label rows list comma-separated class ids, `-` for none.
//!               Nodes without a line are unlabelled.
//! split.json    {"setting": "transductive"|"inductive", "train": [...], "valid": [...], "test": [...]}
//! ```
//!
//! dtype codes: 0 = f32, 1 = f64.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sagn_core::labels::{Labels, TaskKind};
use sagn_core::{Graph, NodeSet, NodeSplit, Setting, Tensor2};

use crate::binfmt::{Reader, Writer};
use crate::error::{Result, SagnError};
use crate::graphio::{graph_hash, read_edge_list, write_edge_list};

pub const FEATURES_MAGIC: &[u8; 4] = b"SGNF";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SettingName {
    Transductive,
    Inductive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFile {
    pub setting: SettingName,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Node partition without a graph attached; see [`SplitSets::node_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSets {
    pub train: NodeSet,
    pub valid: NodeSet,
    pub test: NodeSet,
    pub setting: Setting,
}

impl SplitSets {
    /// Validated split whose inductive train graph is induced from `graph`.
    pub fn node_split(&self, graph: &Graph) -> Result<NodeSplit> {
        Ok(NodeSplit::new(
            graph,
            self.train.clone(),
            self.valid.clone(),
            self.test.clone(),
            self.setting,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Edges exactly as listed; symmetrisation and self-loops are applied
    /// when the transition matrix is built.
    pub graph: Graph,
    pub features: Tensor2<f32>,
    pub labels: Labels,
    pub labeled: NodeSet,
    pub split: SplitSets,
    pub hash: String,
}

impl Dataset {
    /// Checks dimensions and label coverage, then fills in `hash`.
    pub fn new(
        name: impl Into<String>,
        graph: Graph,
        features: Tensor2<f32>,
        labels: Labels,
        labeled: NodeSet,
        split: SplitSets,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.rows() != n {
            return Err(SagnError::Data(format!("graph has {n} nodes but features have {} rows", features.rows())));
        }
        if labels.num_nodes() != n {
            return Err(SagnError::Data(format!("graph has {n} nodes but labels cover {}", labels.num_nodes())));
        }
        for (set, name) in [(&split.train, "train"), (&split.valid, "valid"), (&split.test, "test")] {
            if let Some(&i) = set.iter().find(|&&i| !labeled.contains(i)) {
                return Err(SagnError::Data(format!("{name} node {i} has no label")));
            }
        }
        split.node_split(&graph)?;
        let mut ds = Self {
            name: name.into(),
            graph,
            features,
            labels,
            labeled,
            split,
            hash: String::new(),
        };
        ds.hash = ds.content_hash();
        Ok(ds)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn feature_hash(&self) -> String {
        features_hash(&self.features)
    }

    pub fn graph_hash(&self) -> String {
        graph_hash(&self.graph)
    }

    fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.graph_hash());
        h.update(self.feature_hash());
        h.update(labels_text(&self.labels, &self.labeled));
        h.update(serde_json::to_vec(&split_file(&self.split)).expect("split serialises"));
        hex::encode(h.finalize())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let edges_path = dir.join("edges.tsv");
        let features = read_features(&dir.join("features.bin"))?;
        let n = features.rows();
        let list = read_edge_list(&edges_path)?;
        if list.num_nodes > n {
            return Err(SagnError::Data(format!(
                "{}: node id {} out of range for {n} feature rows",
                edges_path.display(),
                list.num_nodes - 1
            )));
        }
        let graph = Graph::from_weighted_edges(&list.edges, n, false, false)?;
        let (labels, labeled) = read_labels(&dir.join("labels.tsv"), n)?;
        let split = read_split(&dir.join("split.json"), n)?;
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        Self::new(name, graph, features, labels, labeled, split)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| SagnError::io(dir, e))?;
        write_edge_list(&self.graph, &dir.join("edges.tsv"))?;
        write_features(&self.features, &dir.join("features.bin"))?;
        let labels_path = dir.join("labels.tsv");
        fs::write(&labels_path, labels_text(&self.labels, &self.labeled)).map_err(|e| SagnError::io(&labels_path, e))?;
        let split_path = dir.join("split.json");
        let json = serde_json::to_string(&split_file(&self.split)).map_err(|e| SagnError::Json {
            file: split_path.clone(),
            source: e,
        })?;
        fs::write(&split_path, json).map_err(|e| SagnError::io(&split_path, e))
    }
}

pub fn features_hash<T: sagn_core::Scalar>(x: &Tensor2<T>) -> String {
    let mut h = Sha256::new();
    h.update((x.rows() as u64).to_le_bytes());
    h.update((x.cols() as u64).to_le_bytes());
    for v in x.data() {
        h.update(v.f64().to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn write_features<T: sagn_core::Scalar>(x: &Tensor2<T>, path: &Path) -> Result<()> {
    let mut w = Writer::create(path, FEATURES_MAGIC)?;
    w.u64(x.rows() as u64)?;
    w.u64(x.cols() as u64)?;
    w.u8(T::DTYPE.code())?;
    w.payload(x)?;
    w.finish()
}

pub fn read_features(path: &Path) -> Result<Tensor2<f32>> {
    let mut r = Reader::open(path, FEATURES_MAGIC)?;
    let n = r.len(1 << 40)?;
    let d = r.len(1 << 32)?;
    let dtype = r.dtype()?;
    let x = r.payload(n, d, dtype)?;
    r.expect_eof()?;
    if !x.is_finite() {
        return Err(r.corrupt("non-finite feature value"));
    }
    Ok(x)
}

fn split_file(s: &SplitSets) -> SplitFile {
    SplitFile {
        setting: match s.setting {
            Setting::Transductive => SettingName::Transductive,
            Setting::Inductive => SettingName::Inductive,
        },
        train: s.train.as_slice().to_vec(),
        valid: s.valid.as_slice().to_vec(),
        test: s.test.as_slice().to_vec(),
    }
}

pub fn read_split(path: &Path, n: usize) -> Result<SplitSets> {
    let text = fs::read_to_string(path).map_err(|e| SagnError::io(path, e))?;
    let f: SplitFile = serde_json::from_str(&text).map_err(|e| SagnError::Json {
        file: path.to_path_buf(),
        source: e,
    })?;
    for (name, ids) in [("train", &f.train), ("valid", &f.valid), ("test", &f.test)] {
        if let Some(&bad) = ids.iter().find(|&&i| i >= n) {
            return Err(SagnError::Format {
                file: path.to_path_buf(),
                msg: format!("{name} node {bad} out of range for {n} nodes"),
            });
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ids.len() {
            return Err(SagnError::Format {
                file: path.to_path_buf(),
                msg: format!("{name} lists a node twice"),
            });
        }
    }
    Ok(SplitSets {
        train: f.train.into(),
        valid: f.valid.into(),
        test: f.test.into(),
        setting: match f.setting {
            SettingName::Transductive => Setting::Transductive,
            SettingName::Inductive => Setting::Inductive,
        },
    })
}

fn labels_text(labels: &Labels, labeled: &NodeSet) -> String {
    let mut out = String::new();
    let task = match labels.task() {
        TaskKind::SingleLabel => "single",
        TaskKind::MultiLabel => "multi",
    };
    writeln!(out, "task\t{task}\tclasses\t{}", labels.num_classes()).expect("string write");
    for &i in labeled.iter() {
        match labels {
            Labels::Single { classes, .. } => writeln!(out, "{i}\t{}", classes[i]),
            Labels::Multi { matrix } => {
                let on: Vec<String> = (0..matrix.cols())
                    .filter(|&c| matrix.get(i, c) > 0.5)
                    .map(|c| c.to_string())
                    .collect();
                let field = if on.is_empty() { "-".to_string() } else { on.join(",") };
                writeln!(out, "{i}\t{field}")
            }
        }
        .expect("string write");
    }
    out
}

pub fn read_labels(path: &Path, n: usize) -> Result<(Labels, NodeSet)> {
    let text = fs::read_to_string(path).map_err(|e| SagnError::io(path, e))?;
    parse_labels(&text, path, n)
}

pub fn parse_labels(text: &str, path: &Path, n: usize) -> Result<(Labels, NodeSet)> {
    let err = |line: usize, msg: String| SagnError::Parse {
        file: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header line".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (task, c) = match h.as_slice() {
        ["task", t, "classes", c] => {
            let task = match *t {
                "single" => TaskKind::SingleLabel,
                "multi" => TaskKind::MultiLabel,
                other => return Err(err(hline, format!("unknown task {other:?}"))),
            };
            let c: usize = c.parse().map_err(|_| err(hline, format!("invalid class count {c:?}")))?;
            if c == 0 {
                return Err(err(hline, "class count must be positive".into()));
            }
            (task, c)
        }
        _ => return Err(err(hline, "expected header `task <single|multi> classes <C>`".into())),
    };
    let mut classes = vec![0usize; n];
    let mut matrix = Tensor2::<f32>::zeros(n, c);
    let mut seen = vec![false; n];
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(ln, format!("expected `node<TAB>label`, found {} fields", fields.len())));
        }
        let node: usize = fields[0].parse().map_err(|_| err(ln, format!("invalid node id {:?}", fields[0])))?;
        if node >= n {
            return Err(err(ln, format!("node {node} out of range for {n} nodes")));
        }
        if seen[node] {
            return Err(err(ln, format!("node {node} labelled twice")));
        }
        seen[node] = true;
        let class = |s: &str| -> Result<usize> {
            let k: usize = s.parse().map_err(|_| err(ln, format!("invalid class {s:?}")))?;
            if k >= c {
                return Err(err(ln, format!("class {k} >= number of classes {c}")));
            }
            Ok(k)
        };
        match task {
            TaskKind::SingleLabel => classes[node] = class(fields[1])?,
            TaskKind::MultiLabel => {
                if fields[1] != "-" {
                    for s in fields[1].split(',') {
                        matrix.set(node, class(s)?, 1.0);
                    }
                }
            }
        }
    }
    let labels = match task {
        TaskKind::SingleLabel => Labels::single(classes, c)?,
        TaskKind::MultiLabel => Labels::multi(matrix)?,
    };
    Ok((labels, NodeSet::from_mask(&seen)))
}

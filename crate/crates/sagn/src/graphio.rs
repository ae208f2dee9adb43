//! Edge-list text files, the binary CSR cache and graph hashing.
//!
//! Edge list: UTF-8, one `src<TAB>dst[<TAB>weight]` per line, `#` starts a
//! comment, blank lines are skipped. Spaces are accepted as separators.
//!
//! CSR cache (`SGNC`):
//!
//! ```text
//! magic "SGNC" | u32 version | u64 N | u64 E
//! u64 row_offsets[N + 1] | u64 col_indices[E] | f64 weights[E]
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use sagn_core::Graph;

use crate::binfmt::{Reader, Writer};
use crate::error::{Result, SagnError};

pub const CSR_MAGIC: &[u8; 4] = b"SGNC";

/// Parsed edge list. `num_nodes` is one past the largest id seen.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub edges: Vec<(usize, usize, f64)>,
    pub num_nodes: usize,
}

pub fn parse_edge_list(text: &str, file: &Path) -> Result<EdgeList> {
    let mut edges = Vec::new();
    let mut num_nodes = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| SagnError::Parse {
            file: file.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(err(format!("expected 2 or 3 fields, found {}", fields.len())));
        }
        let node = |s: &str| s.parse::<usize>().map_err(|_| err(format!("invalid node id {s:?}")));
        let (s, d) = (node(fields[0])?, node(fields[1])?);
        let w = match fields.get(2) {
            Some(t) => {
                let w: f64 = t.parse().map_err(|_| err(format!("invalid weight {t:?}")))?;
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(err(format!("weight {w} must be finite and >= 0")));
                }
                w
            }
            None => 1.0,
        };
        num_nodes = num_nodes.max(s + 1).max(d + 1);
        edges.push((s, d, w));
    }
    Ok(EdgeList { edges, num_nodes })
}

pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    let text = fs::read_to_string(path).map_err(|e| SagnError::io(path, e))?;
    parse_edge_list(&text, path)
}

/// Writes the canonical edge list of `g`; unit weights are omitted.
pub fn write_edge_list(g: &Graph, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| SagnError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| SagnError::io(path, e);
    writeln!(w, "# src\tdst[\tweight]").map_err(io)?;
    for (s, d, wt) in g.edge_list() {
        if wt == 1.0 {
            writeln!(w, "{s}\t{d}").map_err(io)?;
        } else {
            writeln!(w, "{s}\t{d}\t{wt:?}").map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn write_csr(g: &Graph, path: &Path) -> Result<()> {
    let mut w = Writer::create(path, CSR_MAGIC)?;
    w.u64(g.num_nodes() as u64)?;
    w.u64(g.num_edges() as u64)?;
    w.usizes(g.row_offsets())?;
    w.usizes(g.col_indices())?;
    w.f64s(g.weights())?;
    w.finish()
}

pub fn read_csr(path: &Path) -> Result<Graph> {
    let mut r = Reader::open(path, CSR_MAGIC)?;
    let n = r.len(1 << 40)?;
    let e = r.len(1 << 40)?;
    let offsets = r.usizes(n + 1)?;
    let cols = r.usizes(e)?;
    let weights = r.f64s(e)?;
    r.expect_eof()?;
    Graph::from_csr(n, offsets, cols, Some(weights)).map_err(|err| r.corrupt(err.to_string()))
}

/// SHA-256 over `N`, offsets, columns and weight bits.
pub fn graph_hash(g: &Graph) -> String {
    let mut h = Sha256::new();
    h.update((g.num_nodes() as u64).to_le_bytes());
    for &o in g.row_offsets() {
        h.update((o as u64).to_le_bytes());
    }
    for &c in g.col_indices() {
        h.update((c as u64).to_le_bytes());
    }
    for &w in g.weights() {
        h.update(w.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Rebuilds `g` as `A + Aᵀ` and/or with self-loops on nodes that lack one.
pub fn canonicalize(g: &Graph, symmetrize: bool, self_loops: bool) -> Result<Graph> {
    if !symmetrize && !self_loops {
        return Ok(g.clone());
    }
    Ok(Graph::from_weighted_edges(&g.edge_list(), g.num_nodes(), symmetrize, self_loops)?)
}

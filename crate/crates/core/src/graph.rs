//! Compressed-row graphs, normalized transition operators and node splits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};

/// Immutable weighted graph in canonical compressed-row form.
///
/// Within each row the column indices are strictly increasing; duplicate
/// edges have already been coalesced by summing their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    weights: Vec<f64>,
}

impl Graph {
    /// Builds a graph from unweighted `(src, dst)` pairs.
    pub fn from_edges(
        edges: &[(usize, usize)],
        num_nodes: usize,
        symmetrize: bool,
        add_self_loops: bool,
    ) -> Result<Self> {
        let weighted: Vec<(usize, usize, f64)> = edges.iter().map(|&(s, d)| (s, d, 1.0)).collect();
        Self::from_weighted_edges(&weighted, num_nodes, symmetrize, add_self_loops)
    }

    /// Builds a canonical graph from weighted triples.
    ///
    /// Duplicates are summed. With `symmetrize` every non-loop edge is also
    /// inserted reversed, so the result is `A + Aᵀ` off the diagonal. With
    /// `add_self_loops` a unit-weight loop is inserted for every node that does
    /// not already carry one.
    pub fn from_weighted_edges(
        edges: &[(usize, usize, f64)],
        num_nodes: usize,
        symmetrize: bool,
        add_self_loops: bool,
    ) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut triples = Vec::with_capacity(edges.len() * if symmetrize { 2 } else { 1 } + num_nodes);
        for &(s, d, w) in edges {
            for node in [s, d] {
                if node >= num_nodes {
                    return Err(Error::NodeOutOfRange { node, num_nodes });
                }
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({s}, {d}) has invalid weight {w}"
                )));
            }
            triples.push((s, d, w));
            if symmetrize && s != d {
                triples.push((d, s, w));
            }
        }
        if add_self_loops {
            let mut has_loop = vec![false; num_nodes];
            for &(s, d, _) in &triples {
                if s == d {
                    has_loop[s] = true;
                }
            }
            for (i, present) in has_loop.into_iter().enumerate() {
                if !present {
                    triples.push((i, i, 1.0));
                }
            }
        }
        // stable sort keeps summation order of duplicates deterministic
        triples.sort_by_key(|t| (t.0, t.1));

        let mut row_offsets = vec![0usize; num_nodes + 1];
        let mut col_indices = Vec::with_capacity(triples.len());
        let mut weights: Vec<f64> = Vec::with_capacity(triples.len());
        let mut last: Option<(usize, usize)> = None;
        for (s, d, w) in triples {
            if last == Some((s, d)) {
                *weights.last_mut().expect("coalesce target") += w;
                continue;
            }
            last = Some((s, d));
            row_offsets[s + 1] += 1;
            col_indices.push(d);
            weights.push(w);
        }
        for i in 0..num_nodes {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            num_nodes,
            row_offsets,
            col_indices,
            weights,
        })
    }

    /// Wraps raw CSR arrays after validating every canonical-form invariant.
    pub fn from_csr(
        num_nodes: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        let e = col_indices.len();
        let weights = weights.unwrap_or_else(|| vec![1.0; e]);
        if row_offsets.len() != num_nodes + 1 || weights.len() != e {
            return Err(Error::InvalidArgument(format!(
                "CSR arrays have inconsistent lengths (offsets {}, cols {}, weights {})",
                row_offsets.len(),
                e,
                weights.len()
            )));
        }
        if row_offsets[0] != 0 || row_offsets[num_nodes] != e {
            return Err(Error::InvalidArgument("row offsets must start at 0 and end at E".into()));
        }
        for i in 0..num_nodes {
            let (a, b) = (row_offsets[i], row_offsets[i + 1]);
            if a > b {
                return Err(Error::InvalidArgument(format!("row offsets decrease at row {i}")));
            }
            let row = &col_indices[a..b];
            for (k, &c) in row.iter().enumerate() {
                if c >= num_nodes {
                    return Err(Error::NodeOutOfRange { node: c, num_nodes });
                }
                if k > 0 && row[k - 1] >= c {
                    return Err(Error::InvalidArgument(format!(
                        "row {i} column indices are not strictly increasing"
                    )));
                }
            }
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("edge weights must be finite and >= 0".into()));
        }
        Ok(Self {
            num_nodes,
            row_offsets,
            col_indices,
            weights,
        })
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[node]..self.row_offsets[node + 1]]
    }

    pub fn neighbor_weights(&self, node: usize) -> &[f64] {
        &self.weights[self.row_offsets[node]..self.row_offsets[node + 1]]
    }

    /// Weight of edge `(src, dst)`, found by binary search.
    pub fn edge_weight(&self, src: usize, dst: usize) -> Option<f64> {
        let base = self.row_offsets[src];
        self.neighbors(src).binary_search(&dst).ok().map(|k| self.weights[base + k])
    }

    /// Weighted out-degree of every node.
    pub fn degrees(&self) -> Vec<f64> {
        (0..self.num_nodes)
            .map(|i| self.neighbor_weights(i).iter().sum())
            .collect()
    }

    /// Canonical `(src, dst, weight)` list in row-major order.
    pub fn edge_list(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for i in 0..self.num_nodes {
            for (&j, &w) in self.neighbors(i).iter().zip(self.neighbor_weights(i)) {
                out.push((i, j, w));
            }
        }
        out
    }

    /// True when every node carries a self-loop.
    pub fn has_self_loops(&self) -> bool {
        (0..self.num_nodes).all(|i| self.edge_weight(i, i).is_some())
    }

    /// True when some edge joins a node inside `set` to a node outside it.
    pub fn crosses(&self, set: &NodeSet) -> bool {
        let mask = set.mask(self.num_nodes);
        (0..self.num_nodes).any(|i| self.neighbors(i).iter().any(|&j| mask[i] != mask[j]))
    }

    /// Subgraph induced by `nodes`, relabelled in ascending old-id order.
    pub fn induced_subgraph(&self, nodes: &NodeSet) -> Result<Subgraph> {
        if nodes.is_empty() {
            return Err(Error::EmptyNodeSet);
        }
        if let Some(&max) = nodes.as_slice().last() {
            if max >= self.num_nodes {
                return Err(Error::NodeOutOfRange {
                    node: max,
                    num_nodes: self.num_nodes,
                });
            }
        }
        let mut old_to_new = vec![None; self.num_nodes];
        for (new, &old) in nodes.iter().enumerate() {
            old_to_new[old] = Some(new);
        }
        let m = nodes.len();
        let mut row_offsets = Vec::with_capacity(m + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut weights = Vec::new();
        for &old in nodes.iter() {
            // old ids ascend, so mapped columns stay strictly increasing
            for (&j, &w) in self.neighbors(old).iter().zip(self.neighbor_weights(old)) {
                if let Some(nj) = old_to_new[j] {
                    col_indices.push(nj);
                    weights.push(w);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Subgraph {
            graph: Graph {
                num_nodes: m,
                row_offsets,
                col_indices,
                weights,
            },
            old_to_new,
            new_to_old: nodes.as_slice().to_vec(),
        })
    }

    /// Normalized transition operator.
    ///
    /// Row-stochastic: `w_ij / deg(i)`. Symmetric: `w_ij / sqrt(deg(i) deg(j))`.
    /// Degrees are weighted out-degrees; a zero degree yields a zero entry, so
    /// isolated nodes get all-zero rows.
    pub fn normalize(&self, kind: TransitionKind) -> TransitionMatrix {
        let deg = self.degrees();
        let mut values = Vec::with_capacity(self.num_edges());
        for i in 0..self.num_nodes {
            for (&j, &w) in self.neighbors(i).iter().zip(self.neighbor_weights(i)) {
                let v = match kind {
                    TransitionKind::RowStochastic => {
                        if deg[i] > 0.0 {
                            w / deg[i]
                        } else {
                            0.0
                        }
                    }
                    TransitionKind::Symmetric => {
                        let d = deg[i] * deg[j];
                        if d > 0.0 {
                            w / Float::sqrt(d)
                        } else {
                            0.0
                        }
                    }
                };
                values.push(v);
            }
        }
        TransitionMatrix {
            num_nodes: self.num_nodes,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values,
            kind,
            self_loops: self.has_self_loops(),
        }
    }
}

/// Result of [`Graph::induced_subgraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub graph: Graph,
    pub old_to_new: Vec<Option<usize>>,
    pub new_to_old: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    RowStochastic,
    Symmetric,
}

impl TransitionKind {
    pub fn code(self) -> u8 {
        match self {
            TransitionKind::RowStochastic => 0,
            TransitionKind::Symmetric => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TransitionKind::RowStochastic),
            1 => Some(TransitionKind::Symmetric),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransitionKind::RowStochastic => "row",
            TransitionKind::Symmetric => "sym",
        }
    }
}

/// Normalized sparse propagation operator sharing the graph's CSR structure.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    kind: TransitionKind,
    self_loops: bool,
}

impl TransitionMatrix {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn kind(&self) -> TransitionKind {
        self.kind
    }

    pub fn self_loops(&self) -> bool {
        self.self_loops
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }
}

/// Sorted, duplicate-free set of node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self(mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.binary_search(&node).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.0 {
            if i < n {
                m[i] = true;
            }
        }
        m
    }

    pub fn union(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                core::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                core::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                core::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self(self.0.iter().copied().filter(|&i| !other.contains(i)).collect())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    /// `{0..n} \ self`.
    pub fn complement(&self, n: usize) -> Self {
        let m = self.mask(n);
        Self((0..n).filter(|&i| !m[i]).collect())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.0.iter().all(|&i| !other.contains(i))
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }
}

impl From<Vec<usize>> for NodeSet {
    fn from(v: Vec<usize>) -> Self {
        v.into_iter().collect()
    }
}

impl<'a> IntoIterator for &'a NodeSet {
    type Item = &'a usize;
    type IntoIter = core::slice::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    Transductive,
    Inductive,
}

/// Train/validation/test partition of the node set.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSplit {
    pub train: NodeSet,
    pub valid: NodeSet,
    pub test: NodeSet,
    pub setting: Setting,
    /// Graph induced by the training nodes; present iff `setting` is inductive.
    pub train_graph: Option<Subgraph>,
}

impl NodeSplit {
    /// Validates the partition and, for the inductive setting, builds the
    /// training subgraph from `graph`.
    pub fn new(
        graph: &Graph,
        train: NodeSet,
        valid: NodeSet,
        test: NodeSet,
        setting: Setting,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        for set in [&train, &valid, &test] {
            if let Some(&max) = set.as_slice().last() {
                if max >= n {
                    return Err(Error::NodeOutOfRange { node: max, num_nodes: n });
                }
            }
        }
        if !train.is_disjoint(&valid) || !train.is_disjoint(&test) || !valid.is_disjoint(&test) {
            return Err(Error::InvalidArgument("train/valid/test sets overlap".into()));
        }
        if train.is_empty() {
            return Err(Error::EmptyNodeSet);
        }
        let train_graph = match setting {
            Setting::Transductive => None,
            Setting::Inductive => Some(graph.induced_subgraph(&train)?),
        };
        Ok(Self {
            train,
            valid,
            test,
            setting,
            train_graph,
        })
    }
}

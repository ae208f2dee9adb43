#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sagn_core::graph::{Graph, TransitionKind};
use sagn_core::Tensor2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi style directed edge sample, possibly with duplicates.
pub fn random_edges(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(p) {
                edges.push((i, j));
                if rng.random_bool(0.1) {
                    edges.push((i, j));
                }
            }
        }
    }
    edges
}

pub fn random_graph(rng: &mut impl Rng, max_n: usize) -> Graph {
    let n = rng.random_range(1..=max_n);
    let p = rng.random_range(0.0..0.3);
    let edges = random_edges(rng, n, p);
    Graph::from_edges(&edges, n, rng.random_bool(0.7), rng.random_bool(0.7)).unwrap()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Tensor2<f64> {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor2::from_vec(rows, cols, data).unwrap()
}

pub type Dense = Vec<Vec<f64>>;

/// Dense transition built from the edge list alone.
pub fn dense_transition(g: &Graph, kind: TransitionKind) -> Dense {
    let n = g.num_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for (i, j, w) in g.edge_list() {
        a[i][j] += w;
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let mut t = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let scale = match kind {
                TransitionKind::RowStochastic => deg[i],
                TransitionKind::Symmetric => (deg[i] * deg[j]).sqrt(),
            };
            // a zero degree leaves the entry at zero
            if a[i][j] != 0.0 && scale > 0.0 {
                t[i][j] = a[i][j] / scale;
            }
        }
    }
    t
}

pub fn dense_mul(a: &Dense, m: &Dense) -> Dense {
    let n = a.len();
    let d = m.first().map_or(0, |r| r.len());
    let mut out = vec![vec![0.0; d]; n];
    for i in 0..n {
        for (k, &aik) in a[i].iter().enumerate() {
            if aik != 0.0 {
                for c in 0..d {
                    out[i][c] += aik * m[k][c];
                }
            }
        }
    }
    out
}

pub fn to_dense(t: &Tensor2<f64>) -> Dense {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

pub fn max_diff(a: &Tensor2<f64>, b: &Dense) -> f64 {
    let mut m = 0.0f64;
    for (r, row) in b.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            m = m.max((a.get(r, c) - v).abs());
        }
    }
    m
}

pub struct ToyData {
    pub graph: Graph,
    pub features: Tensor2<f32>,
    pub classes: Vec<usize>,
}

/// Small planted-partition graph with noisy class-mean features.
pub fn toy_sbm(seed: u64, n: usize, c: usize, p_in: f64, p_out: f64, d: usize, noise: f64) -> ToyData {
    let mut r = rng(seed);
    let classes: Vec<usize> = (0..n).map(|i| i % c).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if classes[i] == classes[j] { p_in } else { p_out };
            if r.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(&edges, n, true, true).unwrap();
    let means: Vec<Vec<f64>> = (0..c).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let mut features = Tensor2::zeros(n, d);
    for i in 0..n {
        for k in 0..d {
            let v = means[classes[i]][k] + noise * r.random_range(-1.0..1.0);
            features.set(i, k, v as f32);
        }
    }
    ToyData { graph, features, classes }
}

//! Synthetic graphs: planted-community SBM datasets and uniform `G(n, m)`
//! edge lists for throughput measurements.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use sagn_core::labels::Labels;
use sagn_core::{Graph, NodeSet, Setting, Tensor2};

use crate::dataset::{Dataset, SplitSets};
use crate::error::{Result, SagnError};

#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub intra_p: f64,
    pub inter_p: f64,
    pub feature_dim: usize,
    pub feature_noise_sigma: f64,
    /// Probability that a node's label equals its community.
    pub label_homophily: f64,
    pub seed: u64,
    pub train_fraction: f64,
    pub valid_fraction: f64,
}

impl Default for SbmSpec {
    fn default() -> Self {
        Self {
            num_nodes: 5000,
            num_classes: 5,
            intra_p: 0.02,
            inter_p: 0.002,
            feature_dim: 16,
            feature_noise_sigma: 1.0,
            label_homophily: 0.9,
            seed: 0,
            train_fraction: 0.10,
            valid_fraction: 0.02,
        }
    }
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SagnError::Config(msg));
        if self.num_nodes == 0 || self.num_classes == 0 || self.feature_dim == 0 {
            return bad("sbm nodes, classes and feature_dim must be positive".into());
        }
        if self.num_classes > self.num_nodes {
            return bad(format!("sbm has {} classes but only {} nodes", self.num_classes, self.num_nodes));
        }
        if !(0.0 <= self.inter_p && self.inter_p < self.intra_p && self.intra_p <= 1.0) {
            return bad(format!(
                "sbm needs 0 <= inter_p < intra_p <= 1, got inter_p={} intra_p={}",
                self.inter_p, self.intra_p
            ));
        }
        if !(self.feature_noise_sigma >= 0.0 && self.feature_noise_sigma.is_finite()) {
            return bad(format!("sbm noise sigma {} must be finite and >= 0", self.feature_noise_sigma));
        }
        if !(0.0..=1.0).contains(&self.label_homophily) {
            return bad(format!("sbm homophily {} outside [0, 1]", self.label_homophily));
        }
        let (t, v) = (self.train_fraction, self.valid_fraction);
        if !(t > 0.0 && v >= 0.0 && t + v < 1.0) {
            return bad(format!("sbm split fractions train={t} valid={v} must satisfy 0 < train, train + valid < 1"));
        }
        Ok(())
    }

    /// Community of node `i`; communities are contiguous, near-equal blocks.
    pub fn community(&self, i: usize) -> usize {
        i * self.num_classes / self.num_nodes
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Gap to the next success of a Bernoulli(p) sequence.
fn geometric_skip(rng: &mut impl Rng, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    (u.ln() / (1.0 - p).ln()).floor() as u64
}

/// Undirected SBM edges, each pair stored once as `(i, j)` with `i < j`.
/// Runs in time proportional to the number of edges drawn.
pub fn sbm_edges(spec: &SbmSpec, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let n = spec.num_nodes;
    let c = spec.num_classes;
    let start = |b: usize| (b * n).div_ceil(c);
    let mut edges = Vec::new();
    for a in 0..c {
        for b in a..c {
            let p = if a == b { spec.intra_p } else { spec.inter_p };
            if p <= 0.0 {
                continue;
            }
            let (a0, a1) = (start(a), start(a + 1));
            let (b0, b1) = (start(b), start(b + 1));
            let (sa, sb) = ((a1 - a0) as u64, (b1 - b0) as u64);
            // Ordered pairs over the block; the diagonal block keeps only i < j.
            let total = sa * sb;
            let mut idx = geometric_skip(rng, p);
            while idx < total {
                let (i, j) = (a0 + (idx / sb) as usize, b0 + (idx % sb) as usize);
                if a != b || i < j {
                    edges.push((i, j));
                }
                idx += 1 + geometric_skip(rng, p);
            }
        }
    }
    edges
}

/// Generates a transductive SBM dataset with a `train/valid/rest` split.
pub fn generate_sbm(spec: &SbmSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.num_nodes;
    let c = spec.num_classes;
    let d = spec.feature_dim;

    let edges = sbm_edges(spec, &mut stream(spec.seed, 0));
    let graph = Graph::from_edges(&edges, n, false, false)?;

    let mut rng = stream(spec.seed, 1);
    let classes: Vec<usize> = (0..n)
        .map(|i| {
            let comm = spec.community(i);
            if c == 1 || rng.random::<f64>() < spec.label_homophily {
                comm
            } else {
                let other = rng.random_range(0..c - 1);
                if other >= comm { other + 1 } else { other }
            }
        })
        .collect();

    // Unit-norm class means: distinct points on a sphere, so the noiseless
    // classes are always linearly separable.
    let mut rng = stream(spec.seed, 2);
    let means: Vec<Vec<f64>> = (0..c)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let mut features = Tensor2::<f32>::zeros(n, d);
    let noise = Normal::new(0.0, spec.feature_noise_sigma).map_err(|e| SagnError::Config(e.to_string()))?;
    for (i, &y) in classes.iter().enumerate() {
        for (x, m) in features.row_mut(i).iter_mut().zip(&means[y]) {
            *x = (m + noise.sample(&mut rng)) as f32;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(spec.seed, 3));
    let n_train = ((spec.train_fraction * n as f64).round() as usize).max(1);
    let n_valid = ((spec.valid_fraction * n as f64).round() as usize).min(n - n_train);
    let split = SplitSets {
        train: order[..n_train].iter().copied().collect(),
        valid: order[n_train..n_train + n_valid].iter().copied().collect(),
        test: order[n_train + n_valid..].iter().copied().collect(),
        setting: Setting::Transductive,
    };
    Dataset::new(
        format!("sbm-{}", spec.seed),
        graph,
        features,
        Labels::Single { classes, num_classes: c },
        NodeSet::all(n),
        split,
    )
}

/// `m` edges with endpoints drawn uniformly (self-pairs redrawn).
pub fn gnm_edges(n: usize, m: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = stream(seed, 0);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m && n > 1 {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            edges.push((i, j));
        }
    }
    edges
}

/// Gaussian `n × d` feature matrix.
pub fn gaussian_features(n: usize, d: usize, seed: u64) -> Tensor2<f32> {
    let mut rng = stream(seed, 1);
    let mut x = Tensor2::zeros(n, d);
    for v in x.data_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
    x
}

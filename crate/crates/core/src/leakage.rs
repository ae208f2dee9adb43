//! How much of a training node's propagated label comes from its own label.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{NodeSet, TransitionMatrix};
use crate::labels::Labels;
use crate::metrics::accuracy;
use crate::nn::{Adam, Linear, Module};
use crate::propagation::propagate_labels;
use crate::sle::{argmax, cross_entropy};
use crate::labels::TaskKind;
use crate::tensor::Tensor2;

const INDICATOR_BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { epochs: 300, lr: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageReport {
    pub k_l: usize,
    /// Mean over training nodes of own-label mass divided by total
    /// propagated training-label mass.
    pub train_self_mass: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

impl LeakageReport {
    pub fn gap(&self) -> f64 {
        self.train_acc - self.val_acc
    }
}

/// `(Ā^k)_{ii}` for every node in `nodes`, via propagated indicator columns.
pub fn self_return(t: &TransitionMatrix, nodes: &[usize], k: usize) -> Result<Vec<f64>> {
    let n = t.num_nodes();
    let mut out = Vec::with_capacity(nodes.len());
    for block in nodes.chunks(INDICATOR_BLOCK) {
        let mut e = Tensor2::<f64>::zeros(n, block.len());
        for (j, &i) in block.iter().enumerate() {
            if i >= n {
                return Err(Error::NodeOutOfRange { node: i, num_nodes: n });
            }
            e.set(i, j, 1.0);
        }
        let p = propagate_labels(t, &e, k)?;
        out.extend(block.iter().enumerate().map(|(j, &i)| p.get(i, j)));
    }
    Ok(out)
}

/// Own-label share of each training node's propagated label mass.
pub fn self_mass(t: &TransitionMatrix, y: &Labels, train: &NodeSet, k_l: usize) -> Result<Vec<f64>> {
    let own = self_return(t, train.as_slice(), k_l)?;
    let total = propagate_labels(t, &label_init(y, train)?, k_l)?;
    Ok(train
        .iter()
        .zip(own)
        .map(|(&i, s)| {
            let m: f64 = total.row(i).iter().sum();
            if m > 0.0 { s / m } else { 0.0 }
        })
        .collect())
}

fn label_init(y: &Labels, train: &NodeSet) -> Result<Tensor2<f64>> {
    let (classes, c) = match y {
        Labels::Single { classes, num_classes } => (classes, *num_classes),
        Labels::Multi { .. } => {
            return Err(Error::InvalidArgument("leakage probe needs single-label data".into()))
        }
    };
    let mut m = Tensor2::zeros(classes.len(), c);
    for &i in train.iter() {
        m.set(i, classes[i], 1.0);
    }
    Ok(m)
}

/// Per-column z-score with mean and standard deviation taken over `rows`.
/// Constant columns are only centred.
fn standardize(m: &Tensor2<f64>, rows: &NodeSet) -> Tensor2<f64> {
    let k = rows.len() as f64;
    let mut out = m.clone();
    for c in 0..m.cols() {
        let mean = rows.iter().map(|&i| m.get(i, c)).sum::<f64>() / k;
        let var = rows.iter().map(|&i| (m.get(i, c) - mean) * (m.get(i, c) - mean)).sum::<f64>() / k;
        let scale = if var > 0.0 { 1.0 / num_traits::Float::sqrt(var) } else { 1.0 };
        for r in 0..m.rows() {
            out.set(r, c, (m.get(r, c) - mean) * scale);
        }
    }
    out
}

/// Trains a softmax-regression probe on `Ā^{K_l} Ȳ^(0)` (ground truth on
/// the training set, zeros elsewhere), standardised per column, and reports its train and validation
/// accuracy together with the mean self mass.
pub fn leakage_probe(
    t: &TransitionMatrix,
    y: &Labels,
    train: &NodeSet,
    valid: &NodeSet,
    k_l: usize,
    config: ProbeConfig,
) -> Result<LeakageReport> {
    if k_l < 1 {
        return Err(Error::InvalidArgument("leakage probe needs k_l >= 1".into()));
    }
    if train.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let init = label_init(y, train)?;
    let c = init.cols();
    let propagated = propagate_labels(t, &init, k_l)?;
    let masses = self_mass(t, y, train, k_l)?;
    let train_self_mass = masses.iter().sum::<f64>() / masses.len() as f64;

    let propagated = standardize(&propagated, train);
    let x = propagated.gather_rows(train.as_slice());
    let classes = match y {
        Labels::Single { classes, .. } => classes,
        Labels::Multi { .. } => unreachable!(),
    };
    let mut targets = Tensor2::<f32>::zeros(train.len(), c);
    for (r, &i) in train.iter().enumerate() {
        targets.set(r, classes[i], 1.0);
    }
    let mut probe = Linear::from_weights("probe", Tensor2::zeros(c, c), Some(Tensor2::zeros(1, c)));
    let mut opt = Adam::new(config.lr, 0.0);
    for _ in 0..config.epochs {
        probe.zero_grad();
        let logits = probe.forward(&x)?;
        let (_, d) = cross_entropy(&logits, &targets, TaskKind::SingleLabel)?;
        probe.backward(&d)?;
        opt.step(&mut probe);
    }
    probe.clear_cache();

    let acc = |set: &NodeSet| -> Result<f64> {
        if set.is_empty() {
            return Ok(f64::NAN);
        }
        let logits = probe.apply(&propagated.gather_rows(set.as_slice()))?;
        let pred: Vec<usize> = (0..set.len()).map(|r| argmax(logits.row(r))).collect();
        let truth: Vec<usize> = set.iter().map(|&i| classes[i]).collect();
        accuracy(&truth, &pred)
    };
    Ok(LeakageReport {
        k_l,
        train_self_mass,
        train_acc: acc(train)?,
        val_acc: acc(valid)?,
    })
}

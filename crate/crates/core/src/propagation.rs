//! Training-free preprocessing: repeated sparse-times-dense products.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{TransitionKind, TransitionMatrix};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

/// Default number of output rows handled per SpMM block.
pub const DEFAULT_BLOCK_ROWS: usize = 8192;

/// Stack of propagated feature matrices `X, ĀX, Ā²X, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct HopFeatures<T> {
    pub hops: Vec<Tensor2<T>>,
    pub transition_kind: TransitionKind,
}

impl<T: Scalar> HopFeatures<T> {
    /// Highest hop index held (`hops.len() - 1`).
    pub fn k_max(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    pub fn num_nodes(&self) -> usize {
        self.hops.first().map_or(0, |h| h.rows())
    }

    pub fn dim(&self) -> usize {
        self.hops.first().map_or(0, |h| h.cols())
    }

    /// Gathers the given node rows of every hop, converted to `U`.
    pub fn gather<U: Scalar>(&self, nodes: &[usize]) -> Vec<Tensor2<U>> {
        self.hops.iter().map(|h| h.gather_rows_as(nodes)).collect()
    }
}

/// `Ā · m` with `block_rows` output rows per work unit.
///
/// Each output row is reduced in ascending column order with an `f64`
/// accumulator and rounded once on store.
pub fn spmm_blocked<T: Scalar>(
    t: &TransitionMatrix,
    m: &Tensor2<T>,
    block_rows: usize,
) -> Result<Tensor2<T>> {
    let n = t.num_nodes();
    if m.rows() != n {
        return Err(Error::ShapeMismatch {
            op: "spmm",
            expected: (n, m.cols()),
            found: m.shape(),
        });
    }
    let d = m.cols();
    let mut out = Tensor2::<T>::zeros(n, d);
    if d == 0 {
        return Ok(out);
    }
    let block_rows = block_rows.max(1);
    let src = m.data();
    crate::par::for_each_row(out.data_mut(), block_rows * d, |block, chunk| {
        let mut acc = vec![0.0f64; d];
        let first = block * block_rows;
        for (r, orow) in chunk.chunks_mut(d).enumerate() {
            let (cols, vals) = t.row(first + r);
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (&j, &a) in cols.iter().zip(vals) {
                let mrow = &src[j * d..(j + 1) * d];
                for (s, &v) in acc.iter_mut().zip(mrow) {
                    *s += a * v.f64();
                }
            }
            for (o, &s) in orow.iter_mut().zip(&acc) {
                *o = T::of(s);
            }
        }
    });
    Ok(out)
}

/// `Ā · m` with the default block size.
pub fn spmm<T: Scalar>(t: &TransitionMatrix, m: &Tensor2<T>) -> Result<Tensor2<T>> {
    spmm_blocked(t, m, DEFAULT_BLOCK_ROWS)
}

/// Builds `[X, ĀX, ..., Ā^{k_f} X]` iteratively; hop 0 is `x` itself.
pub fn propagate_features<T: Scalar>(
    t: &TransitionMatrix,
    x: &Tensor2<T>,
    k_f: usize,
) -> Result<HopFeatures<T>> {
    propagate_features_blocked(t, x, k_f, DEFAULT_BLOCK_ROWS)
}

/// [`propagate_features`] with an explicit SpMM row block.
pub fn propagate_features_blocked<T: Scalar>(
    t: &TransitionMatrix,
    x: &Tensor2<T>,
    k_f: usize,
    block_rows: usize,
) -> Result<HopFeatures<T>> {
    let mut hops = Vec::with_capacity(k_f + 1);
    hops.push(x.clone());
    for k in 1..=k_f {
        let next = spmm_blocked(t, &hops[k - 1], block_rows)?;
        hops.push(next);
    }
    Ok(HopFeatures {
        hops,
        transition_kind: t.kind(),
    })
}

/// `Ā^{k_l} y0`; only the last hop is kept.
pub fn propagate_labels<T: Scalar>(
    t: &TransitionMatrix,
    y0: &Tensor2<T>,
    k_l: usize,
) -> Result<Tensor2<T>> {
    if k_l < 1 {
        return Err(Error::InvalidArgument("label propagation needs k_l >= 1".into()));
    }
    let mut cur = spmm(t, y0)?;
    for _ in 1..k_l {
        cur = spmm(t, &cur)?;
    }
    Ok(cur)
}

/// Like [`propagate_labels`] but keeps every intermediate hop (`0..=k_l`).
/// Debugging aid for the leakage experiments.
pub fn propagate_labels_all<T: Scalar>(
    t: &TransitionMatrix,
    y0: &Tensor2<T>,
    k_l: usize,
) -> Result<Vec<Tensor2<T>>> {
    Ok(propagate_features(t, y0, k_l)?.hops)
}

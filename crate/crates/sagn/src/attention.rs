//! Per-node hop attention as CSV: `node_id,hop_0,...,hop_K`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sagn_core::model::{BatchInput, Sagn, Variant};
use sagn_core::{HopFeatures, Tensor2};

use crate::error::{Result, SagnError};

const EXPORT_BATCH: usize = 8192;

/// Eval-mode attention rows for `nodes` over the full-graph hop stack.
pub fn attention_rows(model: &mut Sagn<f32>, hops: &HopFeatures<f32>, nodes: &[usize]) -> Result<Tensor2<f32>> {
    if model.config().variant != Variant::Attention {
        return Err(SagnError::Config(format!(
            "attention export needs the attention variant, model is {}",
            model.config().variant.name()
        )));
    }
    let k = hops.k_max();
    let mut out = Tensor2::zeros(nodes.len(), k + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (b, chunk) in nodes.chunks(EXPORT_BATCH).enumerate() {
        let batch = BatchInput::new(hops.gather(chunk), chunk.to_vec())?;
        let theta = model.hop_attention(&batch, &mut rng)?;
        for r in 0..chunk.len() {
            out.row_mut(b * EXPORT_BATCH + r).copy_from_slice(theta.row(r));
        }
    }
    Ok(out)
}

pub fn export_attention(
    model: &mut Sagn<f32>,
    hops: &HopFeatures<f32>,
    nodes: &[usize],
    path: &Path,
) -> Result<()> {
    let theta = attention_rows(model, hops, nodes)?;
    let file = File::create(path).map_err(|e| SagnError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| SagnError::io(path, e);
    let header: Vec<String> = (0..theta.cols()).map(|k| format!("hop_{k}")).collect();
    writeln!(w, "node_id,{}", header.join(",")).map_err(io)?;
    for (r, &i) in nodes.iter().enumerate() {
        write!(w, "{i}").map_err(io)?;
        for v in theta.row(r) {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

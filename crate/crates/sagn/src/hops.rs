//! Hop-stack cache (`SGNH`).
//!
//! ```text
//! magic "SGNH" | u32 version
//! [u8; 32] graph hash | [u8; 32] feature hash | u8 transition kind (0 row, 1 sym)
//! u64 k_f | u64 N | u64 d | u8 dtype
//! (k_f + 1) matrices of N*d values, row-major
//! ```

use std::path::Path;

use sagn_core::propagation::HopFeatures;
use sagn_core::{Scalar, TransitionKind};

use crate::binfmt::{Reader, Writer};
use crate::error::{Result, SagnError};

pub const HOPS_MAGIC: &[u8; 4] = b"SGNH";

/// Everything a cached hop stack depends on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopCacheKey {
    pub graph_hash: String,
    pub feature_hash: String,
    pub kind: TransitionKind,
    pub k_f: usize,
}

fn hash_bytes(hex_str: &str) -> Result<[u8; 32]> {
    let v = hex::decode(hex_str).map_err(|e| SagnError::Data(format!("bad hash {hex_str:?}: {e}")))?;
    v.try_into()
        .map_err(|_| SagnError::Data(format!("hash {hex_str:?} is not 32 bytes")))
}

pub fn save_hops<T: Scalar>(hf: &HopFeatures<T>, key: &HopCacheKey, path: &Path) -> Result<()> {
    if hf.k_max() != key.k_f || hf.transition_kind != key.kind {
        return Err(SagnError::Data("hop stack does not match its cache key".into()));
    }
    let mut w = Writer::create(path, HOPS_MAGIC)?;
    w.bytes(&hash_bytes(&key.graph_hash)?)?;
    w.bytes(&hash_bytes(&key.feature_hash)?)?;
    w.u8(key.kind.code())?;
    w.u64(key.k_f as u64)?;
    w.u64(hf.num_nodes() as u64)?;
    w.u64(hf.dim() as u64)?;
    w.u8(T::DTYPE.code())?;
    for h in &hf.hops {
        w.payload(h)?;
    }
    w.finish()
}

fn read_key(r: &mut Reader) -> Result<HopCacheKey> {
    let mut g = [0u8; 32];
    r.fill(&mut g)?;
    let mut f = [0u8; 32];
    r.fill(&mut f)?;
    let code = r.u8()?;
    let kind = TransitionKind::from_code(code).ok_or_else(|| r.corrupt(format!("unknown transition kind {code}")))?;
    let k_f = r.len(1 << 16)?;
    Ok(HopCacheKey {
        graph_hash: hex::encode(g),
        feature_hash: hex::encode(f),
        kind,
        k_f,
    })
}

/// Key stored in a cache file, without reading the matrices.
pub fn read_hop_key(path: &Path) -> Result<HopCacheKey> {
    let mut r = Reader::open(path, HOPS_MAGIC)?;
    read_key(&mut r)
}

/// Loads a cache, failing with [`SagnError::StaleCache`] unless its key
/// equals `expected`.
pub fn load_hops<T: Scalar>(path: &Path, expected: &HopCacheKey) -> Result<HopFeatures<T>> {
    let mut r = Reader::open(path, HOPS_MAGIC)?;
    let found = read_key(&mut r)?;
    let stale = |field: &'static str, e: String, f: String| SagnError::StaleCache {
        file: path.to_path_buf(),
        field,
        expected: e,
        found: f,
    };
    if found.graph_hash != expected.graph_hash {
        return Err(stale("graph hash", expected.graph_hash.clone(), found.graph_hash));
    }
    if found.feature_hash != expected.feature_hash {
        return Err(stale("feature hash", expected.feature_hash.clone(), found.feature_hash));
    }
    if found.kind != expected.kind {
        return Err(stale("transition kind", expected.kind.name().into(), found.kind.name().into()));
    }
    if found.k_f != expected.k_f {
        return Err(stale("k_f", expected.k_f.to_string(), found.k_f.to_string()));
    }
    let n = r.len(1 << 40)?;
    let d = r.len(1 << 32)?;
    let dtype = r.dtype()?;
    let hops = (0..=found.k_f)
        .map(|_| r.payload(n, d, dtype))
        .collect::<Result<Vec<_>>>()?;
    r.expect_eof()?;
    Ok(HopFeatures {
        hops,
        transition_kind: found.kind,
    })
}

//! Named-parameter archive (`SGNP`).
//!
//! ```text
//! magic "SGNP" | u32 version
//! u32 meta_len | meta_len bytes of UTF-8 JSON metadata
//! u64 entry_count, then per entry:
//!   u32 name_len | name (UTF-8) | u8 kind (0 param, 1 buffer) | u8 dtype
//!   u64 rows | u64 cols | rows*cols values, row-major
//! ```

use std::path::Path;

use sagn_core::nn::{EntryKind, StateEntry};
use sagn_core::{Scalar, Tensor2};

use crate::binfmt::{Reader, Writer};
use crate::error::{Result, SagnError};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SGNP";

pub fn save_checkpoint<T: Scalar>(path: &Path, meta: &serde_json::Value, entries: &[StateEntry<T>]) -> Result<()> {
    let mut w = Writer::create(path, CHECKPOINT_MAGIC)?;
    let meta = serde_json::to_vec(meta).map_err(|e| SagnError::Json {
        file: path.to_path_buf(),
        source: e,
    })?;
    w.u32(meta.len() as u32)?;
    w.bytes(&meta)?;
    w.u64(entries.len() as u64)?;
    for e in entries {
        w.u32(e.name.len() as u32)?;
        w.bytes(e.name.as_bytes())?;
        w.u8(match e.kind {
            EntryKind::Param => 0,
            EntryKind::Buffer => 1,
        })?;
        w.u8(T::DTYPE.code())?;
        w.u64(e.value.rows() as u64)?;
        w.u64(e.value.cols() as u64)?;
        w.payload(&e.value)?;
    }
    w.finish()
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(serde_json::Value, Vec<StateEntry<T>>)> {
    let mut r = Reader::open(path, CHECKPOINT_MAGIC)?;
    let meta_len = r.u32()? as usize;
    let mut meta = vec![0u8; meta_len];
    r.fill(&mut meta)?;
    let meta: serde_json::Value = serde_json::from_slice(&meta).map_err(|e| SagnError::Json {
        file: path.to_path_buf(),
        source: e,
    })?;
    let count = r.len(1 << 24)?;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let mut name = vec![0u8; name_len];
        r.fill(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| r.corrupt("entry name is not UTF-8"))?;
        let kind = match r.u8()? {
            0 => EntryKind::Param,
            1 => EntryKind::Buffer,
            k => return Err(r.corrupt(format!("unknown entry kind {k}"))),
        };
        let dtype = r.dtype()?;
        let rows = r.len(1 << 40)?;
        let cols = r.len(1 << 32)?;
        let value: Tensor2<T> = r.payload(rows, cols, dtype)?;
        entries.push(StateEntry { name, kind, value });
    }
    r.expect_eof()?;
    Ok((meta, entries))
}

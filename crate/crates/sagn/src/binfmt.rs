//! Little-endian primitives shared by the binary formats.
//!
//! Every file starts with a 4-byte magic and a `u32` version. Integers are
//! `u64` unless stated otherwise, floats are IEEE-754, matrices are row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sagn_core::{DType, Scalar, Tensor2};

use crate::error::{Result, SagnError};

pub const VERSION: u32 = 1;

pub struct Writer {
    inner: BufWriter<File>,
    path: PathBuf,
}

impl Writer {
    pub fn create(path: &Path, magic: &[u8; 4]) -> Result<Self> {
        let file = File::create(path).map_err(|e| SagnError::io(path, e))?;
        let mut w = Self {
            inner: BufWriter::with_capacity(1 << 20, file),
            path: path.to_path_buf(),
        };
        w.bytes(magic)?;
        w.u32(VERSION)?;
        Ok(w)
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner.write_all(b).map_err(|e| SagnError::io(&self.path, e))
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn usizes(&mut self, vs: &[usize]) -> Result<()> {
        vs.iter().try_for_each(|&v| self.u64(v as u64))
    }

    pub fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        vs.iter().try_for_each(|v| self.bytes(&v.to_le_bytes()))
    }

    /// Matrix payload in the tensor's own dtype, no shape prefix.
    pub fn payload<T: Scalar>(&mut self, t: &Tensor2<T>) -> Result<()> {
        match T::DTYPE {
            DType::F32 => t.data().iter().try_for_each(|v| self.bytes(&(v.f64() as f32).to_le_bytes())),
            DType::F64 => t.data().iter().try_for_each(|v| self.bytes(&v.f64().to_le_bytes())),
        }
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| SagnError::io(&self.path, e))
    }
}

pub struct Reader {
    inner: BufReader<File>,
    path: PathBuf,
}

impl Reader {
    /// Opens `path` and checks magic and version.
    pub fn open(path: &Path, magic: &[u8; 4]) -> Result<Self> {
        let file = File::open(path).map_err(|e| SagnError::io(path, e))?;
        let mut r = Self {
            inner: BufReader::with_capacity(1 << 20, file),
            path: path.to_path_buf(),
        };
        let mut m = [0u8; 4];
        r.fill(&mut m)?;
        if &m != magic {
            return Err(r.corrupt(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&m),
                String::from_utf8_lossy(magic)
            )));
        }
        let v = r.u32()?;
        if v != VERSION {
            return Err(r.corrupt(format!("unsupported version {v}")));
        }
        Ok(r)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn corrupt(&self, msg: impl Into<String>) -> SagnError {
        SagnError::Format {
            file: self.path.clone(),
            msg: msg.into(),
        }
    }

    pub fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                self.corrupt("truncated file")
            } else {
                SagnError::io(&self.path, e)
            }
        })
    }

    pub fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.fill(&mut b)?;
        Ok(b[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    /// A `u64` that must fit in memory as a count.
    pub fn len(&mut self, limit: u64) -> Result<usize> {
        let v = self.u64()?;
        if v > limit {
            return Err(self.corrupt(format!("length {v} exceeds limit {limit}")));
        }
        Ok(v as usize)
    }

    pub fn usizes(&mut self, n: usize) -> Result<Vec<usize>> {
        let mut raw = vec![0u8; n * 8];
        self.fill(&mut raw)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")) as usize)
            .collect())
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut raw = vec![0u8; n * 8];
        self.fill(&mut raw)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub fn dtype(&mut self) -> Result<DType> {
        let code = self.u8()?;
        DType::from_code(code).ok_or_else(|| self.corrupt(format!("unknown dtype code {code}")))
    }

    /// Reads a `rows × cols` payload stored as `stored` into a `T` tensor.
    pub fn payload<T: Scalar>(&mut self, rows: usize, cols: usize, stored: DType) -> Result<Tensor2<T>> {
        let n = rows * cols;
        let mut raw = vec![0u8; n * stored.size()];
        self.fill(&mut raw)?;
        let data: Vec<T> = match stored {
            DType::F32 => raw
                .chunks_exact(4)
                .map(|c| T::of(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
                .collect(),
            DType::F64 => raw
                .chunks_exact(8)
                .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
                .collect(),
        };
        Ok(Tensor2::from_vec(rows, cols, data)?)
    }

    /// Fails unless the file has been read to the end.
    pub fn expect_eof(&mut self) -> Result<()> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b) {
            Ok(0) => Ok(()),
            Ok(_) => Err(self.corrupt("trailing bytes")),
            Err(e) => Err(SagnError::io(&self.path, e)),
        }
    }
}

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::par::for_each_row;
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor2<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op: "Tensor2::from_vec",
                expected: (rows, cols),
                found: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; panics on ragged input. Test and
    /// fixture helper.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r.iter().map(|&v| T::of(v)));
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn cast<U: Scalar>(&self) -> Tensor2<U> {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| U::of(v.f64())).collect(),
        }
    }

    pub fn gather_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Gathers rows and converts to another precision in one pass.
    pub fn gather_rows_as<U: Scalar>(&self, idx: &[usize]) -> Tensor2<U> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend(self.row(i).iter().map(|&v| U::of(v.f64())));
        }
        Tensor2 {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    fn check_same(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op,
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same(other, "add_assign")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: T, other: &Self) -> Result<()> {
        self.check_same(other, "axpy")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: T) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }

    /// Adds a `1 x cols` row vector to every row.
    pub fn add_row_broadcast(&mut self, bias: &Self) -> Result<()> {
        if bias.rows != 1 || bias.cols != self.cols {
            return Err(Error::ShapeMismatch {
                op: "add_row_broadcast",
                expected: (1, self.cols),
                found: bias.shape(),
            });
        }
        let cols = self.cols;
        for row in self.data.chunks_mut(cols.max(1)) {
            for (a, &b) in row.iter_mut().zip(&bias.data) {
                *a += b;
            }
        }
        Ok(())
    }

    /// Column sums as a `1 x cols` row vector.
    pub fn col_sums(&self) -> Self {
        let mut out = Self::zeros(1, self.cols);
        for r in 0..self.rows {
            for (o, &v) in out.data.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                expected: (self.cols, rhs.cols),
                found: rhs.shape(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = Self::zeros(n, m);
        let lhs = &self.data;
        let w = &rhs.data;
        for_each_row(&mut out.data, m, |i, orow| {
            let xrow = &lhs[i * k..(i + 1) * k];
            for (p, &xv) in xrow.iter().enumerate() {
                if xv == T::zero() {
                    continue;
                }
                let wrow = &w[p * m..(p + 1) * m];
                for (o, &wv) in orow.iter_mut().zip(wrow) {
                    *o += xv * wv;
                }
            }
        });
        Ok(out)
    }

    /// `selfᵀ · rhs`, reducing over rows in ascending order.
    pub fn t_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::ShapeMismatch {
                op: "t_matmul",
                expected: (self.rows, rhs.cols),
                found: rhs.shape(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = Self::zeros(k, m);
        for r in 0..n {
            let xrow = &self.data[r * k..(r + 1) * k];
            let drow = &rhs.data[r * m..(r + 1) * m];
            for (p, &xv) in xrow.iter().enumerate() {
                if xv == T::zero() {
                    continue;
                }
                let orow = &mut out.data[p * m..(p + 1) * m];
                for (o, &dv) in orow.iter_mut().zip(drow) {
                    *o += xv * dv;
                }
            }
        }
        Ok(out)
    }

    /// `self · rhsᵀ`.
    pub fn matmul_t(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(Error::ShapeMismatch {
                op: "matmul_t",
                expected: (rhs.rows, self.cols),
                found: rhs.shape(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, rhs.rows);
        let mut out = Self::zeros(n, m);
        let lhs = &self.data;
        let w = &rhs.data;
        for_each_row(&mut out.data, m, |i, orow| {
            let drow = &lhs[i * k..(i + 1) * k];
            for (j, o) in orow.iter_mut().enumerate() {
                let wrow = &w[j * k..(j + 1) * k];
                let mut acc = T::zero();
                for (&a, &b) in drow.iter().zip(wrow) {
                    acc += a * b;
                }
                *o = acc;
            }
        });
        Ok(out)
    }

    /// Horizontal concatenation of equally tall blocks.
    pub fn hcat(blocks: &[Self]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let mut cols = 0;
        for b in blocks {
            if b.rows != rows {
                return Err(Error::ShapeMismatch {
                    op: "hcat",
                    expected: (rows, b.cols),
                    found: b.shape(),
                });
            }
            cols += b.cols;
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(r));
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Inverse of [`Tensor2::hcat`] for blocks of width `width`.
    pub fn hsplit(&self, width: usize) -> Result<Vec<Self>> {
        if width == 0 || !self.cols.is_multiple_of(width) {
            return Err(Error::InvalidArgument(alloc::format!(
                "cannot split {} columns into blocks of {width}",
                self.cols
            )));
        }
        let parts = self.cols / width;
        let mut out: Vec<Self> = (0..parts).map(|_| Self::zeros(self.rows, width)).collect();
        for r in 0..self.rows {
            let row = self.row(r);
            for (p, block) in out.iter_mut().enumerate() {
                block.row_mut(r).copy_from_slice(&row[p * width..(p + 1) * width]);
            }
        }
        Ok(out)
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Self {
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }
}

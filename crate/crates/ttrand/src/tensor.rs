//! Dense N-way tensors and column-contiguous matrices.
//!
//! Storage is first-index-fastest (colexicographic): the entry at multi-index
//! (i_1, ..., i_N) lives at offset i_1 + i_2*I_1 + i_3*I_1*I_2 + ... . Under
//! this convention the sequential unfolding that groups the first n modes
//! into rows is a pure relabeling of the same buffer, which is what makes the
//! reshape cascade inside the decomposition algorithms free.
//!
//! Indices are 0-based everywhere in this API; the 1-based convention of the
//! mathematical literature appears only in documentation formulas.

use crate::blas;
use crate::{Error, Result};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Sum of squares with two-level chunked accumulation. Plain sequential
/// summation loses ~n*eps relative accuracy; chunking keeps the error near
/// sqrt-machine-roundoff even for 10^8-entry buffers.
pub(crate) fn sum_sq(xs: &[f64]) -> f64 {
    const CHUNK: usize = 1024;
    let mut total = 0.0;
    for chunk in xs.chunks(CHUNK) {
        let mut partial = 0.0;
        for &x in chunk {
            partial += x * x;
        }
        total += partial;
    }
    total
}

/// Dot product with the same chunked accumulation as [`sum_sq`].
pub(crate) fn dot_chunked(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    const CHUNK: usize = 1024;
    let mut total = 0.0;
    let mut i = 0;
    while i < a.len() {
        let end = (i + CHUNK).min(a.len());
        let mut partial = 0.0;
        for j in i..end {
            partial += a[j] * b[j];
        }
        total += partial;
        i = end;
    }
    total
}

fn checked_product(dims: &[usize]) -> Result<usize> {
    let mut p: usize = 1;
    for &d in dims {
        if d == 0 {
            return Err(Error::InvalidArgument("tensor extents must be >= 1".into()));
        }
        p = p
            .checked_mul(d)
            .ok_or_else(|| Error::InvalidArgument("tensor size overflows usize".into()))?;
    }
    Ok(p)
}

/// A dense real tensor with explicit extents and first-index-fastest storage.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Wrap a data buffer; `data.len()` must equal the product of `dims` and
    /// every extent must be positive.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n = checked_product(&dims)?;
        if data.len() != n {
            return Err(Error::InvalidArgument(format!(
                "data length {} does not match extents product {}",
                data.len(),
                n
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let n = checked_product(&dims)?;
        Ok(DenseTensor {
            dims,
            data: vec![0.0; n],
        })
    }

    /// Build by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n = checked_product(&dims)?;
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for (k, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < dims[k] {
                    break;
                }
                *i = 0;
            }
        }
        Ok(DenseTensor { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of modes N.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Total number of entries.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_parts(self) -> (Vec<usize>, Vec<f64>) {
        (self.dims, self.data)
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.dims.len(), "index arity mismatch");
        let mut off = 0;
        let mut stride = 1;
        for (k, &i) in index.iter().enumerate() {
            assert!(i < self.dims[k], "index {} out of range in mode {}", i, k);
            off += i * stride;
            stride *= self.dims[k];
        }
        off
    }

    /// Entry at a 0-based multi-index.
    pub fn entry(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    /// Relabel the extents without touching the data. The products must
    /// match; the buffer is moved, never copied.
    pub fn reshape(self, new_dims: &[usize]) -> Result<DenseTensor> {
        let n = checked_product(new_dims)?;
        if n != self.data.len() {
            return Err(Error::InvalidArgument(format!(
                "reshape from {:?} to {:?} changes the entry count",
                self.dims, new_dims
            )));
        }
        Ok(DenseTensor {
            dims: new_dims.to_vec(),
            data: self.data,
        })
    }

    fn seq_split(&self, n: usize) -> Result<(usize, usize)> {
        if n == 0 || n >= self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "sequential unfolding needs 1 <= n <= {} (got {})",
                self.dims.len().saturating_sub(1),
                n
            )));
        }
        let rows = self.dims[..n].iter().product();
        let cols = self.dims[n..].iter().product();
        Ok((rows, cols))
    }

    /// Sequential unfolding: group the first `n` modes into rows and the rest
    /// into columns. Under this crate's storage convention the data buffer is
    /// reused bit-identically (this copy-free variant consumes the tensor).
    pub fn into_seq_unfold(self, n: usize) -> Result<Matrix> {
        let (rows, cols) = self.seq_split(n)?;
        Ok(Matrix {
            rows,
            cols,
            data: self.data,
        })
    }

    /// Sequential unfolding as an owned matrix (clones the buffer).
    pub fn unfold_seq(&self, n: usize) -> Result<Matrix> {
        let (rows, cols) = self.seq_split(n)?;
        Ok(Matrix {
            rows,
            cols,
            data: self.data.clone(),
        })
    }

    /// Zero-copy view of the sequential unfolding.
    pub fn seq_view(&self, n: usize) -> Result<MatRef<'_>> {
        let (rows, cols) = self.seq_split(n)?;
        Ok(MatRef {
            rows,
            cols,
            data: &self.data,
        })
    }

    /// Mode-`mode` unfolding: rows are the chosen mode, columns enumerate the
    /// remaining indices with the first remaining index fastest.
    pub fn unfold_mode(&self, mode: usize) -> Result<Matrix> {
        if mode >= self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "mode {} out of range for order {}",
                mode,
                self.dims.len()
            )));
        }
        let i_n = self.dims[mode];
        let stride: usize = self.dims[..mode].iter().product();
        let cols = self.data.len() / i_n;
        let mut out = vec![0.0; self.data.len()];
        // offset = lo + i*stride + hi*stride*I_n; removing the mode digit
        // gives column j = lo + hi*stride
        for (off, &v) in self.data.iter().enumerate() {
            let lo = off % stride;
            let rest = off / stride;
            let i = rest % i_n;
            let hi = rest / i_n;
            let j = lo + hi * stride;
            out[i + j * i_n] = v;
        }
        Ok(Matrix {
            rows: i_n,
            cols,
            data: out,
        })
    }

    /// Inverse of [`unfold_mode`]: refold a mode unfolding into a tensor with
    /// the given extents (`dims[mode]` must equal `m.rows`).
    pub fn fold_mode(m: &Matrix, mode: usize, dims: &[usize]) -> Result<DenseTensor> {
        if mode >= dims.len() {
            return Err(Error::InvalidArgument(format!(
                "mode {} out of range for order {}",
                mode,
                dims.len()
            )));
        }
        let n = checked_product(dims)?;
        if dims[mode] != m.rows || m.rows * m.cols != n {
            return Err(Error::InvalidArgument(
                "matrix shape does not match the requested fold".into(),
            ));
        }
        let i_n = dims[mode];
        let stride: usize = dims[..mode].iter().product();
        let mut data = vec![0.0; n];
        for (off, slot) in data.iter_mut().enumerate() {
            let lo = off % stride;
            let rest = off / stride;
            let i = rest % i_n;
            let hi = rest / i_n;
            let j = lo + hi * stride;
            *slot = m.data[i + j * i_n];
        }
        Ok(DenseTensor {
            dims: dims.to_vec(),
            data,
        })
    }

    /// Mode-`mode` product with a matrix: contracts `b`'s columns against the
    /// chosen mode, replacing extent I_mode by `b.rows()`.
    pub fn mode_n_product(&self, b: &Matrix, mode: usize) -> Result<DenseTensor> {
        if mode >= self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "mode {} out of range for order {}",
                mode,
                self.dims.len()
            )));
        }
        if b.cols != self.dims[mode] {
            return Err(Error::InvalidArgument(format!(
                "mode product needs matrix cols {} to match extent {}",
                b.cols, self.dims[mode]
            )));
        }
        let unf = self.unfold_mode(mode)?;
        let prod = b.matmul(&unf);
        let mut new_dims = self.dims.clone();
        new_dims[mode] = b.rows;
        DenseTensor::fold_mode(&prod, mode, &new_dims)
    }

    /// Mode-(n,m) product: contract mode `n` of `a` against mode `m` of `b`
    /// (equal extents required). Result modes are a's modes without `n`
    /// followed by b's modes without `m`, each group keeping its original
    /// order with the first index fastest.
    pub fn mode_nm_product(a: &DenseTensor, b: &DenseTensor, n: usize, m: usize) -> Result<DenseTensor> {
        if n >= a.dims.len() || m >= b.dims.len() {
            return Err(Error::InvalidArgument(
                "contraction mode out of range".into(),
            ));
        }
        if a.dims[n] != b.dims[m] {
            return Err(Error::InvalidArgument(format!(
                "contracted extents differ: {} vs {}",
                a.dims[n], b.dims[m]
            )));
        }
        let ua = a.unfold_mode(n)?;
        let ub = b.unfold_mode(m)?;
        let prod = ua.matmul_tn(&ub); // (remaining of a) x (remaining of b)
        let mut dims: Vec<usize> = Vec::with_capacity(a.dims.len() + b.dims.len() - 2);
        dims.extend(a.dims.iter().enumerate().filter(|&(k, _)| k != n).map(|(_, &d)| d));
        dims.extend(b.dims.iter().enumerate().filter(|&(k, _)| k != m).map(|(_, &d)| d));
        DenseTensor::new(dims, prod.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        sum_sq(&self.data).sqrt()
    }

    /// Elementwise inner product; dims must match exactly.
    pub fn inner(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
        if a.dims != b.dims {
            return Err(Error::InvalidArgument(format!(
                "inner product dims differ: {:?} vs {:?}",
                a.dims, b.dims
            )));
        }
        Ok(dot_chunked(&a.data, &b.data))
    }
}

/// Column-contiguous matrix; equivalently an order-2 [`DenseTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let n = checked_product(&[rows.max(1), cols.max(1)])?;
        let expected = if rows == 0 || cols == 0 { 0 } else { n };
        if data.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        assert!(r < self.rows && c < self.cols, "matrix index out of range");
        self.data[r + c * self.rows]
    }

    pub(crate) fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r + c * self.rows] = v;
    }

    /// Contiguous slice holding column `j`.
    pub fn col(&self, j: usize) -> &[f64] {
        assert!(j < self.cols);
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn view(&self) -> MatRef<'_> {
        MatRef {
            rows: self.rows,
            cols: self.cols,
            data: &self.data,
        }
    }

    /// Reinterpret as an order-2 tensor (moves the buffer).
    pub fn into_tensor(self) -> DenseTensor {
        DenseTensor {
            dims: vec![self.rows, self.cols],
            data: self.data,
        }
    }

    /// Reinterpret the column-contiguous buffer under new matrix extents with
    /// the same total size (metadata only).
    pub fn reshaped(self, rows: usize, cols: usize) -> Result<Matrix> {
        if rows * cols != self.data.len() {
            return Err(Error::InvalidArgument(format!(
                "matrix reshape {}x{} does not preserve {} entries",
                rows,
                cols,
                self.data.len()
            )));
        }
        Ok(Matrix {
            rows,
            cols,
            data: self.data,
        })
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.data[c + r * self.cols] = self.data[r + c * self.rows];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        sum_sq(&self.data).sqrt()
    }

    /// self * other. Panics on inner-dimension mismatch (programmer error).
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        self.view().matmul(other.view())
    }

    /// self^T * other.
    pub fn matmul_tn(&self, other: &Matrix) -> Matrix {
        self.view().matmul_tn(other.view())
    }

    /// self * other^T.
    pub fn matmul_nt(&self, other: &Matrix) -> Matrix {
        self.view().matmul_nt(other.view())
    }

    /// self * self^T via a symmetric rank-k update.
    pub fn gram_nt(&self) -> Matrix {
        self.view().gram_nt()
    }

    /// self^T * self via a symmetric rank-k update.
    pub fn gram_tn(&self) -> Matrix {
        self.view().gram_tn()
    }

    /// Kronecker product: entry ((ia,ib),(ja,jb)) = a(ia,ja)*b(ib,jb) with
    /// the a-index slow, so kron of column vectors stacks scaled copies of b.
    pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
        let rows = a.rows * b.rows;
        let cols = a.cols * b.cols;
        let mut out = Matrix::zeros(rows, cols);
        for ja in 0..a.cols {
            for jb in 0..b.cols {
                let j = ja * b.cols + jb;
                for ia in 0..a.rows {
                    let av = a.data[ia + ja * a.rows];
                    if av == 0.0 {
                        continue;
                    }
                    let dst = ia * b.rows + j * rows;
                    for ib in 0..b.rows {
                        out.data[dst + ib] = av * b.data[ib + jb * b.rows];
                    }
                }
            }
        }
        out
    }

    /// Khatri-Rao product: column j = kron(a(:,j), b(:,j)). Column counts
    /// must agree.
    pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
        if a.cols != b.cols {
            return Err(Error::InvalidArgument(format!(
                "khatri-rao needs equal column counts ({} vs {})",
                a.cols, b.cols
            )));
        }
        let rows = a.rows * b.rows;
        let mut out = Matrix::zeros(rows, a.cols);
        for j in 0..a.cols {
            for ia in 0..a.rows {
                let av = a.data[ia + j * a.rows];
                let dst = ia * b.rows + j * rows;
                for ib in 0..b.rows {
                    out.data[dst + ib] = av * b.data[ib + j * b.rows];
                }
            }
        }
        Ok(out)
    }
}

/// Borrowed column-contiguous matrix view; lets the pipelines run products
/// against tensor buffers without copying them.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a> {
    rows: usize,
    cols: usize,
    data: &'a [f64],
}

impl<'a> MatRef<'a> {
    pub fn new(rows: usize, cols: usize, data: &'a [f64]) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::InvalidArgument(format!(
                "view length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(MatRef { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &'a [f64] {
        self.data
    }

    pub fn to_owned(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.to_vec(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        sum_sq(self.data).sqrt()
    }

    pub fn matmul(&self, other: MatRef<'_>) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        blas::dgemm_nn(self.rows, other.cols, self.cols, self.data, other.data, &mut out.data);
        out
    }

    pub fn matmul_tn(&self, other: MatRef<'_>) -> Matrix {
        assert_eq!(self.rows, other.rows, "matmul_tn row mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        blas::dgemm_tn(self.cols, other.cols, self.rows, self.data, other.data, &mut out.data);
        out
    }

    pub fn matmul_nt(&self, other: MatRef<'_>) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_nt column mismatch");
        let mut out = Matrix::zeros(self.rows, other.rows);
        blas::dgemm_nt(self.rows, other.rows, self.cols, self.data, other.data, &mut out.data);
        out
    }

    pub fn gram_nt(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.rows);
        blas::dsyrk_full(self.rows, self.cols, self.data, false, &mut out.data);
        out
    }

    pub fn gram_tn(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.cols);
        blas::dsyrk_full(self.cols, self.rows, self.data, true, &mut out.data);
        out
    }
}

const DENSE_MAGIC: &[u8; 4] = b"DNT1";

/// Write a tensor to the binary DNT1 layout: magic `DNT1`, little-endian u64
/// mode count, the extents, then the entries as little-endian doubles in
/// storage order.
pub fn write_dense(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    w.write_all(DENSE_MAGIC)?;
    w.write_all(&(t.dims.len() as u64).to_le_bytes())?;
    for &d in &t.dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in &t.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_exact_or_format(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format(format!("truncated file while reading {what}")))
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or_format(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64_buf(r: &mut impl Read, count: usize, what: &str) -> Result<Vec<f64>> {
    let mut data = Vec::with_capacity(count);
    let mut buf = vec![0u8; 8 * 4096];
    let mut remaining = count;
    while remaining > 0 {
        let take = remaining.min(4096);
        let bytes = &mut buf[..8 * take];
        read_exact_or_format(r, bytes, what)?;
        for ch in bytes.chunks_exact(8) {
            data.push(f64::from_le_bytes(ch.try_into().unwrap()));
        }
        remaining -= take;
    }
    Ok(data)
}

fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(Error::Format("trailing bytes after payload".into())),
        Err(e) => Err(e.into()),
    }
}

/// Read a DNT1 file written by [`write_dense`]. Rejects wrong magic,
/// truncation, zero extents, and trailing bytes.
pub fn read_dense(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let f = std::fs::File::open(path)?;
    let mut r = BufReader::new(f);
    let mut magic = [0u8; 4];
    read_exact_or_format(&mut r, &mut magic, "magic")?;
    if &magic != DENSE_MAGIC {
        return Err(Error::Format("not a DNT1 tensor file (bad magic)".into()));
    }
    let order = read_u64(&mut r, "mode count")?;
    if order == 0 || order > 64 {
        return Err(Error::Format(format!("implausible mode count {order}")));
    }
    let mut dims = Vec::with_capacity(order as usize);
    for k in 0..order {
        let d = read_u64(&mut r, "extent")?;
        if d == 0 {
            return Err(Error::Format(format!("extent {k} is zero")));
        }
        dims.push(usize::try_from(d).map_err(|_| Error::Format("extent overflows usize".into()))?);
    }
    let count = checked_product(&dims).map_err(|_| Error::Format("entry count overflows".into()))?;
    let data = read_f64_buf(&mut r, count, "tensor entries")?;
    expect_eof(&mut r)?;
    DenseTensor::new(dims, data)
}

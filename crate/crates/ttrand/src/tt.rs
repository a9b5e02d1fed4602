//! Tensor-train representation: a chain of order-3 cores whose matrix slices
//! multiply out to the entries of a dense tensor.
//!
//! Core n has extents (r_{n-1}, I_n, r_n) with boundary ranks r_0 = r_N = 1.
//! Because storage is first-index-fastest, each core doubles as the matrix
//! (r_{n-1}, I_n*r_n) or (r_{n-1}*I_n, r_n) without copying, which keeps both
//! the contraction and the orthonormality check allocation-light.

use crate::tensor::{read_f64_buf, DenseTensor, Matrix};
use crate::{Error, Result};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// A tensor in tensor-train form. Immutable after construction; the
/// constructor enforces the structural invariants (order-3 cores, matching
/// adjacent ranks, unit boundary ranks).
#[derive(Debug, Clone, PartialEq)]
pub struct TTTensor {
    cores: Vec<DenseTensor>,
}

impl TTTensor {
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidStructure("a tensor train needs at least one core".into()));
        }
        for (n, c) in cores.iter().enumerate() {
            if c.order() != 3 {
                return Err(Error::InvalidStructure(format!(
                    "core {} has order {} (want 3)",
                    n,
                    c.order()
                )));
            }
        }
        if cores[0].dims()[0] != 1 {
            return Err(Error::InvalidStructure(format!(
                "leading boundary rank is {} (want 1)",
                cores[0].dims()[0]
            )));
        }
        if cores[cores.len() - 1].dims()[2] != 1 {
            return Err(Error::InvalidStructure(format!(
                "trailing boundary rank is {} (want 1)",
                cores[cores.len() - 1].dims()[2]
            )));
        }
        for n in 0..cores.len() - 1 {
            let out = cores[n].dims()[2];
            let inn = cores[n + 1].dims()[0];
            if out != inn {
                return Err(Error::InvalidStructure(format!(
                    "rank mismatch between cores {} and {}: {} vs {}",
                    n,
                    n + 1,
                    out,
                    inn
                )));
            }
        }
        Ok(TTTensor { cores })
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    /// Number of modes N.
    pub fn order(&self) -> usize {
        self.cores.len()
    }

    /// Mode extents (I_1, ..., I_N).
    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    /// Interior ranks (r_1, ..., r_{N-1}); empty for a single-core train.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1]
            .iter()
            .map(|c| c.dims()[2])
            .collect()
    }

    /// Entry count of the dense tensor this train represents.
    pub fn dense_len(&self) -> usize {
        self.cores.iter().map(|c| c.dims()[1]).product()
    }

    /// Total number of stored core entries (the compressed size).
    pub fn storage_len(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    /// Multiply the train out to a dense tensor. Evaluates left to right,
    /// carrying a (prefix-size x rank) matrix, so peak memory is bounded by a
    /// small multiple of the final dense size.
    pub fn contract(&self) -> Result<DenseTensor> {
        let dims = self.dims();
        let first = &self.cores[0];
        let mut carry = Matrix::new(
            first.dims()[1],
            first.dims()[2],
            first.data().to_vec(),
        )?;
        for core in &self.cores[1..] {
            let (r_in, i_n, r_out) = (core.dims()[0], core.dims()[1], core.dims()[2]);
            let core_mat = crate::MatRef::new(r_in, i_n * r_out, core.data())?;
            let prod = carry.view().matmul(core_mat);
            carry = prod.reshaped(carry.rows() * i_n, r_out)?;
        }
        carry.into_tensor().reshape(&dims)
    }

    /// Evaluate one entry: the row-vector-through-matrices product of the
    /// core slices picked out by the index. Cost O(N * max_rank^2).
    pub fn entry(&self, index: &[usize]) -> Result<f64> {
        if index.len() != self.cores.len() {
            return Err(Error::InvalidArgument(format!(
                "index arity {} does not match order {}",
                index.len(),
                self.cores.len()
            )));
        }
        let mut v: Vec<f64> = vec![1.0];
        for (n, core) in self.cores.iter().enumerate() {
            let (r_in, i_n, r_out) = (core.dims()[0], core.dims()[1], core.dims()[2]);
            let i = index[n];
            if i >= i_n {
                return Err(Error::InvalidArgument(format!(
                    "index {} out of range for extent {} in mode {}",
                    i, i_n, n
                )));
            }
            let data = core.data();
            let mut next = vec![0.0; r_out];
            for (b, slot) in next.iter_mut().enumerate() {
                let base = i * r_in + b * r_in * i_n;
                let mut acc = 0.0;
                for (a, &va) in v.iter().enumerate() {
                    acc += va * data[base + a];
                }
                *slot = acc;
            }
            v = next;
        }
        Ok(v[0])
    }

    /// Deviation of core `n` (0-based, n < N-1) from left-orthonormality:
    /// ||G^T G - I||_F for G = reshape(core n, (r_{n-1}*I_n, r_n)). Zero
    /// means the core is exactly left-orthonormal.
    pub fn left_ortho_defect(&self, n: usize) -> Result<f64> {
        if n + 1 >= self.cores.len() {
            return Err(Error::InvalidArgument(format!(
                "left-orthonormality is defined for cores 0..{} (got {})",
                self.cores.len().saturating_sub(1),
                n
            )));
        }
        let core = &self.cores[n];
        let (r_in, i_n, r_out) = (core.dims()[0], core.dims()[1], core.dims()[2]);
        let g = crate::MatRef::new(r_in * i_n, r_out, core.data())?;
        let mut gtg = g.to_owned().gram_tn();
        for i in 0..r_out {
            let v = gtg.get(i, i);
            gtg.set(i, i, v - 1.0);
        }
        Ok(gtg.frobenius_norm())
    }

    /// Largest left-orthonormality defect over all cores but the last.
    pub fn max_left_ortho_defect(&self) -> f64 {
        (0..self.cores.len().saturating_sub(1))
            .map(|n| self.left_ortho_defect(n).unwrap())
            .fold(0.0, f64::max)
    }
}

const TT_MAGIC: &[u8; 4] = b"TTC1";

/// Write a train to the binary TTC1 layout: magic `TTC1`, little-endian u64
/// mode count, the N extents, the N-1 interior ranks, then the cores in
/// order as little-endian doubles in storage order.
pub fn tt_write(tt: &TTTensor, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    w.write_all(TT_MAGIC)?;
    w.write_all(&(tt.order() as u64).to_le_bytes())?;
    for d in tt.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for r in tt.ranks() {
        w.write_all(&(r as u64).to_le_bytes())?;
    }
    for core in tt.cores() {
        for &v in core.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a TTC1 file written by [`tt_write`]. Malformed headers and truncated
/// payloads are format errors; structurally impossible metadata (zero ranks)
/// is an invalid-structure error.
pub fn tt_read(path: impl AsRef<Path>) -> Result<TTTensor> {
    let f = std::fs::File::open(path)?;
    let mut r = BufReader::new(f);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated file while reading magic".into()))?;
    if &magic != TT_MAGIC {
        return Err(Error::Format("not a TTC1 tensor-train file (bad magic)".into()));
    }
    let order = read_u64(&mut r, "mode count")?;
    if order == 0 || order > 64 {
        return Err(Error::Format(format!("implausible mode count {order}")));
    }
    let order = order as usize;
    let mut dims = Vec::with_capacity(order);
    for k in 0..order {
        let d = read_u64(&mut r, "extent")?;
        if d == 0 {
            return Err(Error::Format(format!("extent {k} is zero")));
        }
        dims.push(d as usize);
    }
    let mut ranks = Vec::with_capacity(order - 1);
    for k in 0..order - 1 {
        let v = read_u64(&mut r, "rank")?;
        if v == 0 {
            return Err(Error::InvalidStructure(format!("interior rank {k} is zero")));
        }
        ranks.push(v as usize);
    }
    let mut cores = Vec::with_capacity(order);
    for n in 0..order {
        let r_in = if n == 0 { 1 } else { ranks[n - 1] };
        let r_out = if n == order - 1 { 1 } else { ranks[n] };
        let count = r_in
            .checked_mul(dims[n])
            .and_then(|x| x.checked_mul(r_out))
            .ok_or_else(|| Error::Format("core size overflows".into()))?;
        let data = read_f64_buf(&mut r, count, "core entries")?;
        cores.push(DenseTensor::new(vec![r_in, dims[n], r_out], data)?);
    }
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err(Error::Format("trailing bytes after cores".into())),
        Err(e) => return Err(e.into()),
    }
    TTTensor::new(cores)
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format(format!("truncated file while reading {what}")))?;
    Ok(u64::from_le_bytes(b))
}

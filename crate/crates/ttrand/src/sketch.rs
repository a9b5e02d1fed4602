//! Random test matrices ("sketches") used to probe the range of unfoldings:
//! dense Gaussian, Khatri-Rao Gaussian, Kronecker Gaussian, sparse subspace
//! embedding, and subsampled randomized discrete cosine transform.
//!
//! Every operator is realized from an explicit seeded stream, so a draw is a
//! pure function of (spec, stream state) and bit-reproducible across runs.
//! Structured kinds carry compact factor representations; their fast apply
//! paths must agree with the dense materialization to rounding error, and the
//! tests hold them to that.

use crate::rng::StreamRng;
use crate::tensor::{MatRef, Matrix};
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// The sketch families selectable throughout the crate (and on the CLI).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchKind {
    /// Dense i.i.d. standard normal matrix.
    Gaussian,
    /// Khatri-Rao (columnwise Kronecker) product of small Gaussian factors,
    /// one per trailing tensor mode.
    KrGaussian,
    /// Kronecker product of equal-width Gaussian factors, truncated to the
    /// requested column count.
    KronGaussian,
    /// Sparse subspace embedding: one random +-1 per row, in a random column.
    SpEmb,
    /// Subsampled randomized discrete cosine transform:
    /// sqrt(rows/cols) * D * C * S with D a random sign diagonal, C the
    /// orthonormal type-II DCT, S a without-replacement column sampler.
    Sdct,
}

impl SketchKind {
    pub const ALL: [SketchKind; 5] = [
        SketchKind::Gaussian,
        SketchKind::KrGaussian,
        SketchKind::KronGaussian,
        SketchKind::SpEmb,
        SketchKind::Sdct,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::KrGaussian => "kr-gaussian",
            SketchKind::KronGaussian => "kron-gaussian",
            SketchKind::SpEmb => "spemb",
            SketchKind::Sdct => "sdct",
        }
    }
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SketchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SketchKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown sketch kind '{s}' (expected gaussian | kr-gaussian | kron-gaussian | spemb | sdct)"
                ))
            })
    }
}

/// Everything needed to realize a sketch deterministically. `factor_dims`
/// lists the extents whose product is the operator's row count; structured
/// kinds build one factor per extent, dense kinds only use the product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub factor_dims: Vec<usize>,
    pub cols: usize,
    pub seed: u64,
    pub stream_id: u64,
}

impl SketchSpec {
    pub fn new(kind: SketchKind, factor_dims: Vec<usize>, cols: usize, seed: u64, stream_id: u64) -> Result<Self> {
        if cols == 0 {
            return Err(Error::InvalidArgument("sketch needs at least one column".into()));
        }
        if factor_dims.is_empty() || factor_dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "sketch row structure needs positive extents".into(),
            ));
        }
        Ok(SketchSpec {
            kind,
            factor_dims,
            cols,
            seed,
            stream_id,
        })
    }

    pub fn rows(&self) -> usize {
        self.factor_dims.iter().product()
    }

    /// Draw from a stream freshly derived from (seed, stream_id); identical
    /// specs therefore realize bit-identical operators.
    pub fn draw_fresh(&self) -> Result<SketchOperator> {
        let mut rng = StreamRng::new(self.seed, self.stream_id);
        draw(self, &mut rng)
    }
}

/// A realized sketch. Kept in its compact kind-specific representation;
/// [`SketchOperator::materialize`] expands it to a dense matrix on demand.
#[derive(Debug, Clone)]
pub enum SketchOperator {
    Dense {
        m: Matrix,
    },
    /// Khatri-Rao chain; `factors[k]` has `factor_dims[k]` rows and `cols`
    /// columns, with the first factor's index fastest in the row space.
    Kr {
        factors: Vec<Matrix>,
    },
    /// Kronecker chain of equal-width factors; only the first `cols` columns
    /// of the full product are used.
    Kron {
        factors: Vec<Matrix>,
        rows: usize,
        cols: usize,
    },
    /// Row j carries `sign[j]` in column `col[j]`, zero elsewhere.
    SpEmb {
        rows: usize,
        cols: usize,
        col: Vec<usize>,
        sign: Vec<f64>,
    },
    /// Column j is `scale * D * (DCT column samples[j])`.
    Sdct {
        rows: usize,
        sign: Vec<f64>,
        samples: Vec<usize>,
        scale: f64,
    },
}

/// Realize a sketch by consuming randomness from `rng`. Successive calls on
/// the same stream yield independent operators (used by the blocked range
/// finder); reset the stream to reproduce a draw.
pub fn draw(spec: &SketchSpec, rng: &mut StreamRng) -> Result<SketchOperator> {
    let rows = spec.rows();
    let cols = spec.cols;
    match spec.kind {
        SketchKind::Gaussian => {
            let mut data = vec![0.0; rows * cols];
            rng.fill_normal(&mut data);
            Ok(SketchOperator::Dense {
                m: Matrix::new(rows, cols, data)?,
            })
        }
        SketchKind::KrGaussian => {
            let mut factors = Vec::with_capacity(spec.factor_dims.len());
            for &d in &spec.factor_dims {
                let mut data = vec![0.0; d * cols];
                rng.fill_normal(&mut data);
                factors.push(Matrix::new(d, cols, data)?);
            }
            Ok(SketchOperator::Kr { factors })
        }
        SketchKind::KronGaussian => {
            // smallest equal factor width whose Kronecker product reaches the
            // requested column count; integer search avoids the fp boundary
            // cases of ceil(cols^(1/k))
            let k = spec.factor_dims.len();
            let reaches = |w: usize| -> bool {
                let mut p = 1usize;
                for _ in 0..k {
                    p = match p.checked_mul(w) {
                        Some(v) => v,
                        None => return true,
                    };
                    if p >= cols {
                        return true;
                    }
                }
                false
            };
            let mut width = 1usize;
            while !reaches(width) {
                width += 1;
            }
            let mut factors = Vec::with_capacity(k);
            for &d in &spec.factor_dims {
                let mut data = vec![0.0; d * width];
                rng.fill_normal(&mut data);
                factors.push(Matrix::new(d, width, data)?);
            }
            Ok(SketchOperator::Kron {
                factors,
                rows,
                cols,
            })
        }
        SketchKind::SpEmb => {
            let mut col = Vec::with_capacity(rows);
            let mut sign = Vec::with_capacity(rows);
            for _ in 0..rows {
                col.push(rng.next_below(cols));
                sign.push(rng.next_sign());
            }
            Ok(SketchOperator::SpEmb {
                rows,
                cols,
                col,
                sign,
            })
        }
        SketchKind::Sdct => {
            if cols > rows {
                return Err(Error::InvalidArgument(format!(
                    "sdct samples {cols} of {rows} transform columns without replacement; \
                     it needs cols <= rows"
                )));
            }
            let sign: Vec<f64> = (0..rows).map(|_| rng.next_sign()).collect();
            let samples = rng.sample_without_replacement(rows, cols);
            let scale = (rows as f64 / cols as f64).sqrt();
            Ok(SketchOperator::Sdct {
                rows,
                sign,
                samples,
                scale,
            })
        }
    }
}

/// Entry (i, k) of the orthonormal type-II DCT matrix of size n.
fn dct2_entry(n: usize, i: usize, k: usize) -> f64 {
    let nf = n as f64;
    let s = if k == 0 {
        (1.0 / nf).sqrt()
    } else {
        (2.0 / nf).sqrt()
    };
    // row index i enumerates the transform (frequency) axis, k the signal axis
    s * (std::f64::consts::PI * i as f64 * (2.0 * k as f64 + 1.0) / (2.0 * nf)).cos()
}

impl SketchOperator {
    pub fn rows(&self) -> usize {
        match self {
            SketchOperator::Dense { m } => m.rows(),
            SketchOperator::Kr { factors } => factors.iter().map(|f| f.rows()).product(),
            SketchOperator::Kron { rows, .. } => *rows,
            SketchOperator::SpEmb { rows, .. } => *rows,
            SketchOperator::Sdct { rows, .. } => *rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            SketchOperator::Dense { m } => m.cols(),
            SketchOperator::Kr { factors } => factors[0].cols(),
            SketchOperator::Kron { cols, .. } => *cols,
            SketchOperator::SpEmb { cols, .. } => *cols,
            SketchOperator::Sdct { samples, .. } => samples.len(),
        }
    }

    /// Expand to the dense rows x cols matrix this operator represents.
    pub fn materialize(&self) -> Matrix {
        match self {
            SketchOperator::Dense { m } => m.clone(),
            SketchOperator::Kr { factors } => {
                let cols = factors[0].cols();
                let rows = self.rows();
                let mut out = Matrix::zeros(rows, cols);
                let mut buf = Vec::new();
                for c in 0..cols {
                    kr_column(factors, c, &mut buf);
                    out.data_mut()[c * rows..(c + 1) * rows].copy_from_slice(&buf);
                }
                out
            }
            SketchOperator::Kron {
                factors,
                rows,
                cols,
            } => {
                let mut out = Matrix::zeros(*rows, *cols);
                let mut buf = Vec::new();
                for c in 0..*cols {
                    kron_column(factors, c, &mut buf);
                    out.data_mut()[c * rows..(c + 1) * rows].copy_from_slice(&buf);
                }
                out
            }
            SketchOperator::SpEmb {
                rows,
                cols,
                col,
                sign,
            } => {
                let mut out = Matrix::zeros(*rows, *cols);
                for j in 0..*rows {
                    out.set(j, col[j], sign[j]);
                }
                out
            }
            SketchOperator::Sdct {
                rows,
                sign,
                samples,
                scale,
            } => {
                let mut out = Matrix::zeros(*rows, samples.len());
                for (j, &s) in samples.iter().enumerate() {
                    for (i, &sg) in sign.iter().enumerate() {
                        out.set(i, j, scale * sg * dct2_entry(*rows, i, s));
                    }
                }
                out
            }
        }
    }

    /// Right-multiply: A * Omega. Structured kinds use their fast paths; all
    /// paths agree with `a * materialize()` to rounding error.
    pub fn apply_right(&self, a: MatRef<'_>) -> Result<Matrix> {
        if a.cols() != self.rows() {
            return Err(Error::InvalidArgument(format!(
                "sketch apply needs A.cols = {} to match operator rows {}",
                a.cols(),
                self.rows()
            )));
        }
        match self {
            SketchOperator::Dense { m } => Ok(a.matmul(m.view())),
            SketchOperator::Kr { .. } | SketchOperator::Kron { .. } => {
                // evaluate operator columns without holding the full product
                let rows = self.rows();
                let cols = self.cols();
                let mut out = Matrix::zeros(a.rows(), cols);
                let mut buf = Vec::new();
                for c in 0..cols {
                    match self {
                        SketchOperator::Kr { factors } => kr_column(factors, c, &mut buf),
                        SketchOperator::Kron { factors, .. } => kron_column(factors, c, &mut buf),
                        _ => unreachable!(),
                    }
                    let v = MatRef::new(rows, 1, &buf)?;
                    let prod = a.matmul(v);
                    out.data_mut()[c * a.rows()..(c + 1) * a.rows()].copy_from_slice(prod.data());
                }
                Ok(out)
            }
            SketchOperator::SpEmb {
                rows, cols, col, sign, ..
            } => {
                let ar = a.rows();
                let mut out = Matrix::zeros(ar, *cols);
                let adata = a.data();
                for j in 0..*rows {
                    let dst = col[j] * ar;
                    let src = j * ar;
                    let s = sign[j];
                    let out_data = out.data_mut();
                    for p in 0..ar {
                        out_data[dst + p] += s * adata[src + p];
                    }
                }
                Ok(out)
            }
            SketchOperator::Sdct {
                rows,
                sign,
                samples,
                scale,
            } => {
                // scale A's columns by the sign diagonal, then contract with
                // just the sampled DCT columns
                let ar = a.rows();
                let mut scaled = a.to_owned();
                {
                    let d = scaled.data_mut();
                    for j in 0..*rows {
                        let s = sign[j];
                        for p in 0..ar {
                            d[j * ar + p] *= s;
                        }
                    }
                }
                let ell = samples.len();
                let mut cmat = Matrix::zeros(*rows, ell);
                for (j, &s) in samples.iter().enumerate() {
                    for i in 0..*rows {
                        cmat.set(i, j, *scale * dct2_entry(*rows, i, s));
                    }
                }
                Ok(scaled.matmul(&cmat))
            }
        }
    }
}

/// Write the Khatri-Rao column c (the Kronecker product of the factors'
/// c-th columns, first factor fastest) into buf.
fn kr_column(factors: &[Matrix], c: usize, buf: &mut Vec<f64>) {
    buf.clear();
    buf.push(1.0);
    for f in factors {
        let col = f.col(c);
        let prev = buf.len();
        let mut next = vec![0.0; prev * col.len()];
        for (hi, &fv) in col.iter().enumerate() {
            for lo in 0..prev {
                next[lo + hi * prev] = buf[lo] * fv;
            }
        }
        *buf = next;
    }
}

/// Write column c of the Kronecker chain into buf; the chain column index
/// decomposes into per-factor column digits with the first factor's digit
/// fastest, mirroring the row-space convention.
fn kron_column(factors: &[Matrix], c: usize, buf: &mut Vec<f64>) {
    let mut digits = Vec::with_capacity(factors.len());
    let mut rem = c;
    for f in factors {
        digits.push(rem % f.cols());
        rem /= f.cols();
    }
    buf.clear();
    buf.push(1.0);
    for (f, &d) in factors.iter().zip(&digits) {
        let col = f.col(d);
        let prev = buf.len();
        let mut next = vec![0.0; prev * col.len()];
        for (hi, &fv) in col.iter().enumerate() {
            for lo in 0..prev {
                next[lo + hi * prev] = buf[lo] * fv;
            }
        }
        *buf = next;
    }
}

/// Contract a tensor with each Khatri-Rao column by a chain of mode-vector
/// products, never materializing the sketch. `data` holds a tensor of shape
/// (front, trailing_dims...) in first-index-fastest order; `factors[m]` has
/// `trailing_dims[m]` rows, and all factors share a column count. Column c
/// of the result is the contraction of the trailing modes with the factors'
/// c-th columns, contracted last mode first.
pub fn apply_kr_via_tenvecmult(
    front: usize,
    trailing_dims: &[usize],
    data: &[f64],
    factors: &[Matrix],
) -> Result<Matrix> {
    if trailing_dims.is_empty() || factors.len() != trailing_dims.len() {
        return Err(Error::InvalidArgument(
            "one sketch factor per trailing mode is required".into(),
        ));
    }
    let ell = factors[0].cols();
    for (f, &d) in factors.iter().zip(trailing_dims) {
        if f.rows() != d || f.cols() != ell {
            return Err(Error::InvalidArgument(format!(
                "factor shape {}x{} does not match trailing extent {} / column count {}",
                f.rows(),
                f.cols(),
                d,
                ell
            )));
        }
    }
    let total: usize = trailing_dims.iter().product::<usize>() * front;
    if data.len() != total {
        return Err(Error::InvalidArgument(format!(
            "tensor buffer has {} entries, shape wants {}",
            data.len(),
            total
        )));
    }
    // The last-mode contraction touches the whole tensor, so it is batched
    // over groups of sketch columns as a single level-3 product per group
    // (one pass over the data instead of one per column). The remaining
    // modes shrink the operand by a factor of the extent each, so their
    // per-column chains are cheap.
    let last = trailing_dims.len() - 1;
    let extent0 = trailing_dims[last];
    let rest0 = data.len() / extent0;
    let group = (MAX_BATCH_ENTRIES / rest0.max(1)).clamp(1, ell);
    let mut out = Matrix::zeros(front, ell);
    let mut batched = vec![0.0; rest0 * group];
    let mut cur = Vec::new();
    let mut next = Vec::new();
    let mut c0 = 0;
    while c0 < ell {
        let width = group.min(ell - c0);
        let fblock = &factors[last].data()[c0 * extent0..(c0 + width) * extent0];
        let buf = &mut batched[..rest0 * width];
        crate::blas::dgemm_nn(rest0, width, extent0, data, fblock, buf);
        for dc in 0..width {
            let c = c0 + dc;
            let mut src: &[f64] = &buf[dc * rest0..(dc + 1) * rest0];
            let mut len = rest0;
            for (m, f) in factors.iter().enumerate().rev().skip(1) {
                let extent = trailing_dims[m];
                let rest = len / extent;
                next.resize(rest, 0.0);
                let fcol = f.col(c);
                crate::blas::dgemm_nn(rest, 1, extent, &src[..len], fcol, &mut next);
                std::mem::swap(&mut cur, &mut next);
                src = &cur;
                len = rest;
            }
            out.data_mut()[c * front..(c + 1) * front].copy_from_slice(&src[..front]);
        }
        c0 += width;
    }
    Ok(out)
}

/// Entry budget for one batched contraction buffer in
/// [`apply_kr_via_tenvecmult`] (0.5 GB of doubles); wider sketches fall back
/// to processing columns in groups.
const MAX_BATCH_ENTRIES: usize = 1 << 26;

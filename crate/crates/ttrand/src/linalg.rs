//! Matrix factorization kernels shared by every decomposition path: SVD
//! truncation by tolerance and by rank, orthonormalization, singular value
//! computation, and a blocked adaptive range finder.
//!
//! Truncations dispatch on aspect ratio: once one dimension exceeds four
//! times the other, the work moves to the smaller Gram matrix (an eigenvalue
//! problem) and the singular vectors are recovered afterwards. The Gram route
//! squares the condition number, so singular values that fall below
//! sqrt(machine epsilon) times the largest one are reported as exact zeros
//! there; callers that need tiny values must not take the Gram route (none
//! in this crate do).

use crate::rng::StreamRng;
use crate::sketch::{draw, SketchSpec};
use crate::tensor::{dot_chunked, sum_sq, MatRef, Matrix};
use crate::{Error, Result};
use ndarray::prelude::*;
use ndarray_linalg::{Eigh, JobSvd, EigValsh, QR, SVDDC, UPLO};

/// Aspect ratio beyond which truncations switch to the Gram-matrix route.
const GRAM_RATIO: usize = 4;

/// Relative cutoff below which Gram-route singular values collapse to zero.
fn gram_cutoff(sigma_max: f64) -> f64 {
    f64::EPSILON.sqrt() * sigma_max
}

/// Result of a rank- or tolerance-truncated SVD.
#[derive(Debug, Clone)]
pub struct TruncationResult {
    /// Orthonormal left factor, rows x rank.
    pub q: Matrix,
    /// Retained rank (columns of `q`).
    pub rank: usize,
    /// Retained singular values, nonincreasing.
    pub sigma: Vec<f64>,
    /// Frobenius norm of the discarded part: sqrt(sum of dropped sigma^2).
    pub tail: f64,
    /// The co-factor `Sigma V^T` (rank x cols), so `q * projected`
    /// reconstructs the truncation.
    pub projected: Option<Matrix>,
}

fn to_array(a: MatRef<'_>) -> Array2<f64> {
    Array2::from_shape_vec((a.rows(), a.cols()).f(), a.data().to_vec())
        .expect("view dimensions match its buffer")
}

fn from_array(a: &Array2<f64>) -> Matrix {
    Matrix::from_fn(a.nrows(), a.ncols(), |r, c| a[[r, c]])
}

fn check_finite(data: &[f64]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("matrix contains non-finite entries".into()))
    }
}

fn numeric(what: &str, e: impl std::fmt::Display) -> Error {
    Error::Numeric(format!("{what}: {e}"))
}

/// Descending eigenvalues-as-singular-values of a Gram matrix: clamp
/// negatives, take square roots, zero out everything below the cutoff.
fn gram_sigma(vals: &Array1<f64>) -> Vec<f64> {
    let mut sigma: Vec<f64> = vals.iter().rev().map(|&l| l.max(0.0).sqrt()).collect();
    let cut = gram_cutoff(sigma.first().copied().unwrap_or(0.0));
    for s in sigma.iter_mut() {
        if *s < cut {
            *s = 0.0;
        }
    }
    sigma
}

/// All singular values of `a`, nonincreasing. Uses the Gram route for very
/// tall or very wide inputs (values below sqrt(eps)*sigma_1 become 0 there),
/// a dense divide-and-conquer SVD otherwise.
pub fn singular_values(a: MatRef<'_>) -> Result<Vec<f64>> {
    check_finite(a.data())?;
    let (r, c) = (a.rows(), a.cols());
    if c > GRAM_RATIO * r || r > GRAM_RATIO * c {
        let g = if c > GRAM_RATIO * r { a.gram_nt() } else { a.gram_tn() };
        let vals = to_array(g.view())
            .eigvalsh(UPLO::Lower)
            .map_err(|e| numeric("gram eigenvalues failed", e))?;
        Ok(gram_sigma(&vals))
    } else {
        let (_, s, _) = to_array(a)
            .svddc(JobSvd::None)
            .map_err(|e| numeric("singular value computation failed", e))?;
        Ok(s.to_vec())
    }
}

/// Internal SVD representation, shaped by which route produced it.
enum SvdParts {
    /// Economy SVD straight from LAPACK: u is rows x min, vt is min x cols.
    Dense { u: Matrix, vt: Matrix },
    /// Wide input: u holds all rows eigenvectors of A A^T, descending.
    WideGram { u: Matrix },
    /// Tall input: u holds the `kpos` recovered left vectors (already
    /// re-orthonormalized via QR with correction factor `rfac`), `v` the full
    /// right eigenvector basis, descending.
    TallGram {
        u: Matrix,
        v: Matrix,
        rfac: Matrix,
        kpos: usize,
    },
}

/// Smallest truncation tolerance the Gram route can serve: squaring the
/// matrix floors resolvable singular values near sqrt(machine eps) * sigma_1,
/// and spurious values of that size would survive a tighter cut. The factor
/// leaves room for eigensolver backward error on large Gram matrices.
fn gram_route_floor(fro_norm: f64) -> f64 {
    32.0 * f64::EPSILON.sqrt() * fro_norm
}

fn svd_parts(a: MatRef<'_>) -> Result<(Vec<f64>, SvdParts)> {
    svd_parts_routed(a, true)
}

fn svd_parts_routed(a: MatRef<'_>, allow_gram: bool) -> Result<(Vec<f64>, SvdParts)> {
    check_finite(a.data())?;
    let (r, c) = (a.rows(), a.cols());
    if allow_gram && c > GRAM_RATIO * r {
        let g = a.gram_nt();
        let (vals, vecs) = to_array(g.view())
            .eigh(UPLO::Lower)
            .map_err(|e| numeric("gram eigendecomposition failed", e))?;
        let sigma = gram_sigma(&vals);
        let u = Matrix::from_fn(r, r, |i, k| vecs[[i, r - 1 - k]]);
        Ok((sigma, SvdParts::WideGram { u }))
    } else if allow_gram && r > GRAM_RATIO * c {
        let g = a.gram_tn();
        let (vals, vecs) = to_array(g.view())
            .eigh(UPLO::Lower)
            .map_err(|e| numeric("gram eigendecomposition failed", e))?;
        let sigma = gram_sigma(&vals);
        let v = Matrix::from_fn(c, c, |i, k| vecs[[i, c - 1 - k]]);
        let kpos = sigma.iter().take_while(|s| **s > 0.0).count();
        // recover U = A V Sigma^{-1} on the well-conditioned block, then
        // re-orthonormalize; the QR factor is folded into the co-factor so
        // q * projected still reproduces the truncation exactly
        let vpos = Matrix::new(c, kpos, v.data()[..c * kpos].to_vec())?;
        let mut w = a.matmul(vpos.view());
        for (col, &s) in w.data_mut().chunks_exact_mut(r).zip(&sigma[..kpos]) {
            let inv = 1.0 / s;
            for x in col {
                *x *= inv;
            }
        }
        let (u, rfac) = if kpos > 0 {
            let (qa, ra) = to_array(w.view())
                .qr()
                .map_err(|e| numeric("left-vector recovery failed", e))?;
            (from_array(&qa), from_array(&ra))
        } else {
            (Matrix::zeros(r, 0), Matrix::zeros(0, 0))
        };
        Ok((sigma, SvdParts::TallGram { u, v, rfac, kpos }))
    } else {
        let (u, s, vt) = to_array(a)
            .svddc(JobSvd::Some)
            .map_err(|e| numeric("svd failed", e))?;
        let u = u.ok_or_else(|| Error::Numeric("svd returned no left vectors".into()))?;
        let vt = vt.ok_or_else(|| Error::Numeric("svd returned no right vectors".into()))?;
        Ok((
            s.to_vec(),
            SvdParts::Dense {
                u: from_array(&u),
                vt: from_array(&vt),
            },
        ))
    }
}

/// Extend the columns in `q` (column-major, rows x have) to `want`
/// orthonormal columns with a deterministic pseudo-random complement.
fn complete_columns(q: &mut Vec<f64>, rows: usize, have: usize, want: usize) {
    let mut rng = StreamRng::new(0xC001_0FF5, ((rows as u64) << 24) ^ have as u64);
    let mut k = have;
    while k < want {
        let mut v: Vec<f64> = (0..rows).map(|_| rng.next_normal()).collect();
        for _ in 0..2 {
            for c in 0..k {
                let col = &q[c * rows..(c + 1) * rows];
                let d = dot_chunked(&v, col);
                for (x, y) in v.iter_mut().zip(col) {
                    *x -= d * y;
                }
            }
        }
        let n = sum_sq(&v).sqrt();
        if n > 1e-8 * (rows as f64).sqrt() {
            for x in &mut v {
                *x /= n;
            }
            q.extend_from_slice(&v);
            k += 1;
        }
    }
}

/// Assemble a TruncationResult keeping the leading `rank` directions.
fn finish(a: MatRef<'_>, sigma_all: Vec<f64>, parts: SvdParts, rank: usize) -> Result<TruncationResult> {
    let (rows, cols) = (a.rows(), a.cols());
    let tail_sq: f64 = sigma_all[rank..].iter().map(|s| s * s).sum();
    let tail = tail_sq.sqrt();
    let sigma = sigma_all[..rank].to_vec();

    let (q, projected) = match parts {
        SvdParts::Dense { u, vt } => {
            let q = Matrix::new(rows, rank, u.data()[..rows * rank].to_vec())?;
            let proj = Matrix::from_fn(rank, cols, |k, j| sigma[k] * vt.get(k, j));
            (q, proj)
        }
        SvdParts::WideGram { u } => {
            let q = Matrix::new(rows, rank, u.data()[..rows * rank].to_vec())?;
            let proj = q.view().matmul_tn(a);
            (q, proj)
        }
        SvdParts::TallGram { u, v, rfac, kpos } => {
            let have = rank.min(kpos);
            let mut qdata = u.data()[..rows * have].to_vec();
            if rank > have {
                complete_columns(&mut qdata, rows, have, rank);
            }
            let q = Matrix::new(rows, rank, qdata)?;
            // co-factor rows: (rfac * Sigma * V^T) for the recovered block,
            // zero rows for any completed directions
            let rs = Matrix::from_fn(have, kpos, |i, j| rfac.get(i, j) * sigma_all[j]);
            let vpos = Matrix::new(cols, kpos, v.data()[..cols * kpos].to_vec())?;
            let top = rs.matmul_nt(&vpos);
            let mut proj = Matrix::zeros(rank, cols);
            for j in 0..cols {
                for i in 0..have {
                    proj.set(i, j, top.get(i, j));
                }
            }
            (q, proj)
        }
    };
    check_finite(q.data())?;
    Ok(TruncationResult {
        q,
        rank,
        sigma,
        tail,
        projected: Some(projected),
    })
}

/// Truncate to the smallest rank whose discarded tail is at most `delta` in
/// Frobenius norm. The rank is always at least 1, even when `delta` exceeds
/// the whole input norm.
pub fn svd_truncate_tol(a: MatRef<'_>, delta: f64) -> Result<TruncationResult> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "truncation tolerance must be nonnegative (got {delta})"
        )));
    }
    let allow_gram = delta > gram_route_floor(a.frobenius_norm());
    let (sigma, parts) = svd_parts_routed(a, allow_gram)?;
    // slack keeps sqrt/square round trips (delta passed as sqrt of a budget)
    // from bumping the rank by one
    let limit = delta * delta * (1.0 + 1e-10);
    let mut tail_sq = 0.0;
    let mut rank = sigma.len();
    while rank > 1 {
        let add = sigma[rank - 1] * sigma[rank - 1];
        if tail_sq + add > limit {
            break;
        }
        tail_sq += add;
        rank -= 1;
    }
    finish(a, sigma, parts, rank)
}

/// Truncate to exactly `rank` leading directions (1 <= rank <= min(rows,
/// cols)); the result is a Frobenius-optimal rank-`rank` approximation.
pub fn svd_truncate_rank(a: MatRef<'_>, rank: usize) -> Result<TruncationResult> {
    let cap = a.rows().min(a.cols());
    if rank == 0 || rank > cap {
        return Err(Error::InvalidArgument(format!(
            "target rank {rank} outside 1..={cap}"
        )));
    }
    let (sigma, parts) = svd_parts(a)?;
    finish(a, sigma, parts, rank)
}

/// Thin-QR orthonormalization of a full-column-rank matrix. Returns a matrix
/// with the same column span and orthonormal columns; inputs that are
/// rank-deficient to working precision are refused so the caller can decide
/// on a fallback.
pub fn orthonormalize(m: &Matrix) -> Result<Matrix> {
    check_finite(m.data())?;
    if m.cols() > m.rows() {
        return Err(Error::DegenerateInput(format!(
            "{}x{} matrix cannot have full column rank",
            m.rows(),
            m.cols()
        )));
    }
    let (q, r) = to_array(m.view())
        .qr()
        .map_err(|e| numeric("qr factorization failed", e))?;
    let diag: Vec<f64> = (0..m.cols()).map(|i| r[[i, i]].abs()).collect();
    let dmax = diag.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = f64::EPSILON * m.rows().max(m.cols()) as f64 * dmax;
    if dmax == 0.0 || diag.iter().any(|&d| d <= tol) {
        return Err(Error::DegenerateInput(
            "input is rank-deficient to working precision".into(),
        ));
    }
    Ok(from_array(&q))
}

/// Orthonormalize a block, discarding directions that are negligible within
/// the block itself (relative cutoff 1e-10 on the block's singular values).
/// Returns None when nothing survives.
pub(crate) fn orthonormalize_block(y: &Matrix) -> Result<Option<Matrix>> {
    let (qa, ra) = to_array(y.view())
        .qr()
        .map_err(|e| numeric("block qr failed", e))?;
    let (ur, s, _) = ra
        .svddc(JobSvd::Some)
        .map_err(|e| numeric("block trim svd failed", e))?;
    let ur = ur.ok_or_else(|| Error::Numeric("block trim returned no vectors".into()))?;
    let smax = s.get(0).copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return Ok(None);
    }
    let keep = s.iter().take_while(|v| **v > 1e-10 * smax).count();
    if keep == 0 {
        return Ok(None);
    }
    let q1 = from_array(&qa);
    let rot = Matrix::from_fn(ur.nrows(), keep, |i, j| ur[[i, j]]);
    Ok(Some(q1.matmul(&rot)))
}

/// Subtract the projection onto the columns in `qdata` from every column of
/// `y` (one classical block Gram-Schmidt pass).
fn deflate(qdata: &[f64], rows: usize, k: usize, y: &mut Matrix) {
    if k == 0 {
        return;
    }
    let q = MatRef::new(rows, k, qdata).expect("basis buffer consistent");
    let qty = q.matmul_tn(y.view());
    let corr = q.matmul(qty.view());
    for (x, c) in y.data_mut().iter_mut().zip(corr.data()) {
        *x -= c;
    }
}

/// Blocked adaptive range finder: grows an orthonormal basis Q in blocks of
/// `b` sketched directions until the tracked residual estimate
/// E = ||A||_F^2 - ||Q^T A||_F^2 falls to `delta`^2, the basis reaches full
/// rank, or fresh blocks stop contributing. `q_power` extra multiplications
/// by (A A^T) per block sharpen the sketch toward the leading subspace (no
/// intermediate re-orthonormalization, adequate for q_power <= 2).
///
/// The sketch spec's column count is overridden per block; its randomness is
/// consumed from `rng`, so repeated calls with a reset stream reproduce the
/// same basis. A zero input yields a single deterministic unit column, never
/// an empty factor.
pub fn adapt_range_finder(
    a: MatRef<'_>,
    delta: f64,
    b: usize,
    q_power: usize,
    spec: &SketchSpec,
    rng: &mut StreamRng,
) -> Result<Matrix> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "range finder tolerance must be positive (got {delta})"
        )));
    }
    if b == 0 {
        return Err(Error::InvalidArgument("block size must be at least 1".into()));
    }
    if spec.rows() != a.cols() {
        return Err(Error::InvalidArgument(format!(
            "sketch row space {} does not match matrix columns {}",
            spec.rows(),
            a.cols()
        )));
    }
    let (rows, cols) = (a.rows(), a.cols());
    let cap = rows.min(cols);
    let norm_sq = sum_sq(a.data());
    if !norm_sq.is_finite() {
        return Err(Error::Numeric("input has non-finite entries".into()));
    }
    let mut e = norm_sq;
    let mut qdata: Vec<f64> = Vec::new();
    let mut k = 0usize;
    let mut empty_blocks = 0usize;

    while k < cap {
        let bsize = b.min(cap - k);
        let mut bspec = spec.clone();
        bspec.cols = bsize;
        let omega = draw(&bspec, rng)?;
        let mut y = omega.apply_right(a)?;
        for _ in 0..q_power {
            let t = a.matmul_tn(y.view());
            y = a.matmul(t.view());
        }
        check_finite(y.data())
            .map_err(|_| Error::Numeric("range finder produced non-finite sketch".into()))?;

        let orig: Vec<f64> = (0..bsize)
            .map(|j| sum_sq(&y.data()[j * rows..(j + 1) * rows]).sqrt())
            .collect();
        deflate(&qdata, rows, k, &mut y);
        deflate(&qdata, rows, k, &mut y);
        // drop directions that were already captured: their deflated norm is
        // a negligible fraction of what was sketched
        let survivors: Vec<usize> = (0..bsize)
            .filter(|&j| {
                let after = sum_sq(&y.data()[j * rows..(j + 1) * rows]).sqrt();
                orig[j] > 0.0 && after > 1e-10 * orig[j]
            })
            .collect();
        let grew = if survivors.is_empty() {
            false
        } else {
            let mut ydata = Vec::with_capacity(rows * survivors.len());
            for &j in &survivors {
                ydata.extend_from_slice(&y.data()[j * rows..(j + 1) * rows]);
            }
            let ysub = Matrix::new(rows, survivors.len(), ydata)?;
            match orthonormalize_block(&ysub)? {
                None => false,
                Some(qb) => {
                    let bt_a = qb.view().matmul_tn(a);
                    e -= sum_sq(bt_a.data());
                    qdata.extend_from_slice(qb.data());
                    k += qb.cols();
                    true
                }
            }
        };
        if !grew {
            empty_blocks += 1;
            if empty_blocks >= 2 {
                break;
            }
            continue;
        }
        empty_blocks = 0;

        #[cfg(debug_assertions)]
        {
            if rows * cols <= 200_000 {
                let q = MatRef::new(rows, k, &qdata)?;
                let proj = q.matmul(q.matmul_tn(a).view());
                let direct: f64 = a
                    .data()
                    .iter()
                    .zip(proj.data())
                    .map(|(x, p)| (x - p) * (x - p))
                    .sum();
                debug_assert!(
                    (direct - e).abs() <= 1e-8 * norm_sq.max(1e-300),
                    "tracked residual {e} drifted from direct residual {direct}"
                );
            }
        }

        if e <= delta * delta {
            break;
        }
    }

    if k == 0 {
        // zero (or numerically empty) input: fall back to one unit column
        qdata = vec![0.0; rows];
        qdata[0] = 1.0;
        k = 1;
    }
    Matrix::new(rows, k, qdata)
}

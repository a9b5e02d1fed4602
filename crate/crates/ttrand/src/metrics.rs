//! Approximation quality metrics and a slow reference bound used by tests.

use crate::linalg::singular_values;
use crate::tensor::DenseTensor;
use crate::{Error, Result};

/// Ceiling on tensor entries for [`tt_svd_bound_oracle`]; the oracle runs
/// full singular value decompositions of every sequential unfolding.
const BOUND_ORACLE_MAX_ENTRIES: usize = 1_000_000;

/// Relative Frobenius error ||a - b||_F / ||a||_F.
pub fn relative_error(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument(
            "relative error needs a reference with positive norm".into(),
        ));
    }
    // chunked two-level accumulation, same scheme as the norm itself
    let mut total = 0.0f64;
    for (ca, cb) in a.data().chunks(1024).zip(b.data().chunks(1024)) {
        let mut part = 0.0f64;
        for (x, y) in ca.iter().zip(cb) {
            let d = x - y;
            part += d * d;
        }
        total += part;
    }
    Ok(total.sqrt() / norm)
}

/// The complementary score 1 - relative error.
pub fn fit(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    Ok(1.0 - relative_error(a, b)?)
}

/// Reference bound for the sequential-SVD reconstruction error at the given
/// interior ranks: the root of the summed squared singular-value tails of
/// every sequential unfolding, each tail starting just past its rank. Meant
/// for tests; refuses tensors above 10^6 entries.
pub fn tt_svd_bound_oracle(t: &DenseTensor, ranks: &[usize]) -> Result<f64> {
    if t.len() > BOUND_ORACLE_MAX_ENTRIES {
        return Err(Error::ResourceLimit(format!(
            "bound oracle limited to {BOUND_ORACLE_MAX_ENTRIES} entries, got {}",
            t.len()
        )));
    }
    if t.order() < 2 {
        return Err(Error::InvalidArgument(
            "bound oracle needs a tensor with at least 2 modes".into(),
        ));
    }
    if ranks.len() != t.order() - 1 {
        return Err(Error::InvalidArgument(format!(
            "rank vector has {} entries, expected {}",
            ranks.len(),
            t.order() - 1
        )));
    }
    if ranks.contains(&0) {
        return Err(Error::InvalidArgument("ranks must be at least 1".into()));
    }
    let mut total = 0.0;
    for (n, &mu) in ranks.iter().enumerate() {
        let sig = singular_values(t.seq_view(n + 1)?)?;
        for s in sig.iter().skip(mu) {
            total += s * s;
        }
    }
    Ok(total.sqrt())
}

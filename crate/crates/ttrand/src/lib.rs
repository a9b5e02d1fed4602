//! Tensor-train (TT) decomposition of dense tensors.
//!
//! A TT decomposition represents an N-way tensor as a chain of order-3 cores
//! contracted over auxiliary rank indices. This crate provides:
//!
//! * dense tensor storage with the reshape/unfolding algebra the algorithms
//!   are built on ([`tensor`]),
//! * the TT format itself with contraction back to dense form ([`tt`]),
//! * low-rank matrix kernels: SVD truncation by tolerance or rank, and a
//!   blocked adaptive range finder ([`linalg`]),
//! * five random sketch families (Gaussian, Khatri-Rao Gaussian, Kronecker
//!   Gaussian, sparse subspace embedding, subsampled DCT) with structured
//!   fast paths ([`sketch`]),
//! * the decomposition algorithms: deterministic TT-SVD (by tolerance and by
//!   rank), two randomized fixed-rank algorithms with power iteration, greedy
//!   rank estimation, and an adaptive fixed-precision algorithm
//!   ([`decompose`]),
//! * synthetic test-tensor generators and quality metrics ([`generate`],
//!   [`metrics`]),
//! * a benchmark CLI ([`cli`], exposed through the `ttrand` binary).
//!
//! Every randomized path draws from a counter-based splittable generator
//! ([`rng`]), so results are bit-reproducible for a given seed across
//! platforms.
//!
//! The `examples/` directory contains one runnable walk-through per major
//! capability; start with `cargo run --release --example tolerance_sweep`.

mod blas;
pub mod cli;
pub mod decompose;
pub mod generate;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod sketch;
pub mod tensor;
pub mod tt;

/// Errors reported by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Structurally inconsistent data (e.g. mismatched TT core ranks).
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    /// A file does not conform to the DNT1/TTC1 layouts.
    #[error("format error: {0}")]
    Format(String),
    /// A numeric kernel failed or produced non-finite values.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Input is degenerate for the requested operation (e.g. rank-deficient
    /// input to an orthonormalization that requires full column rank).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    /// An operation would exceed a configured resource budget.
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use decompose::{
    adaptive_rand_tt, error_estimate_gram, greedy_tt_rank, rand_tt_fixed_rank,
    rand_tt_fixed_rank_gram, tt_svd, tt_svd_fixed_rank, Decomposition, FixedPrecisionParams,
    FixedRankParams,
};
pub use generate::{gen_func_hilbert, gen_func_sin, gen_tt_noise, gen_tt_snr, GenFamily, GenSpec};
pub use linalg::{
    adapt_range_finder, orthonormalize, singular_values, svd_truncate_rank, svd_truncate_tol,
    TruncationResult,
};
pub use metrics::{fit, relative_error, tt_svd_bound_oracle};
pub use sketch::{apply_kr_via_tenvecmult, SketchKind, SketchOperator, SketchSpec};
pub use tensor::{read_dense, write_dense, DenseTensor, MatRef, Matrix};
pub use tt::{tt_read, tt_write, TTTensor};

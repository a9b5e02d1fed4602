//! Thin FFI onto the CBLAS routines of the OpenBLAS library that the LAPACK
//! backend already links. Everything here works on column-contiguous buffers.

use std::sync::Once;

const COL_MAJOR: i32 = 102;
const NO_TRANS: i32 = 111;
const TRANS: i32 = 112;
const UPPER: i32 = 121;

#[link(name = "openblas")]
extern "C" {
    fn cblas_dgemm(
        layout: i32,
        transa: i32,
        transb: i32,
        m: i32,
        n: i32,
        k: i32,
        alpha: f64,
        a: *const f64,
        lda: i32,
        b: *const f64,
        ldb: i32,
        beta: f64,
        c: *mut f64,
        ldc: i32,
    );
    fn cblas_dsyrk(
        layout: i32,
        uplo: i32,
        trans: i32,
        n: i32,
        k: i32,
        alpha: f64,
        a: *const f64,
        lda: i32,
        beta: f64,
        c: *mut f64,
        ldc: i32,
    );
    fn openblas_set_num_threads(n: i32);
}

static INIT: Once = Once::new();

/// One-time process setup for the BLAS backend.
///
/// Two concerns, both driven by environment variables the user may also set
/// directly:
///
/// * `OPENBLAS_CORETYPE`: dynamic-arch OpenBLAS builds select kernels by CPU
///   detection, which fails inside VMs that mask CPUID model information and
///   silently falls back to generic SSE3 kernels (several times slower). When
///   the variable is unset, pick the widest kernel set the CPU actually
///   supports. Must happen before the first BLAS call of the process.
/// * `TT_SKETCH_THREADS`: caps the library's internal parallelism.
pub(crate) fn ensure_init() {
    INIT.call_once(|| {
        #[cfg(target_arch = "x86_64")]
        if std::env::var_os("OPENBLAS_CORETYPE").is_none() {
            if is_x86_feature_detected!("avx512f") {
                std::env::set_var("OPENBLAS_CORETYPE", "SKYLAKEX");
            } else if is_x86_feature_detected!("avx2") {
                std::env::set_var("OPENBLAS_CORETYPE", "HASWELL");
            }
        }
        if let Some(n) = thread_cap() {
            unsafe { openblas_set_num_threads(n as i32) };
        }
    });
}

/// Parsed value of `TT_SKETCH_THREADS`, if set to a positive integer.
pub(crate) fn thread_cap() -> Option<usize> {
    std::env::var("TT_SKETCH_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// c[m x n] = a[m x k] * b[k x n], all column-contiguous.
pub(crate) fn dgemm_nn(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    ensure_init();
    if m == 0 || n == 0 {
        return;
    }
    unsafe {
        cblas_dgemm(
            COL_MAJOR,
            NO_TRANS,
            NO_TRANS,
            m as i32,
            n as i32,
            k as i32,
            1.0,
            a.as_ptr(),
            m.max(1) as i32,
            b.as_ptr(),
            k.max(1) as i32,
            0.0,
            c.as_mut_ptr(),
            m as i32,
        );
    }
}

/// c[m x n] = a^T * b where a is [k x m], b is [k x n].
pub(crate) fn dgemm_tn(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    ensure_init();
    if m == 0 || n == 0 {
        return;
    }
    unsafe {
        cblas_dgemm(
            COL_MAJOR,
            TRANS,
            NO_TRANS,
            m as i32,
            n as i32,
            k as i32,
            1.0,
            a.as_ptr(),
            k.max(1) as i32,
            b.as_ptr(),
            k.max(1) as i32,
            0.0,
            c.as_mut_ptr(),
            m as i32,
        );
    }
}

/// c[m x n] = a * b^T where a is [m x k], b is [n x k].
pub(crate) fn dgemm_nt(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    ensure_init();
    if m == 0 || n == 0 {
        return;
    }
    unsafe {
        cblas_dgemm(
            COL_MAJOR,
            NO_TRANS,
            TRANS,
            m as i32,
            n as i32,
            k as i32,
            1.0,
            a.as_ptr(),
            m.max(1) as i32,
            b.as_ptr(),
            n.max(1) as i32,
            0.0,
            c.as_mut_ptr(),
            m as i32,
        );
    }
}

/// Symmetric rank-k update: g[n x n] = a * a^T (trans = false, a is [n x k])
/// or a^T * a (trans = true, a is [k x n]). The full symmetric matrix is
/// written, mirroring the computed triangle.
pub(crate) fn dsyrk_full(n: usize, k: usize, a: &[f64], trans: bool, g: &mut [f64]) {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(g.len(), n * n);
    ensure_init();
    if n == 0 {
        return;
    }
    let (t, lda) = if trans { (TRANS, k) } else { (NO_TRANS, n) };
    unsafe {
        cblas_dsyrk(
            COL_MAJOR,
            UPPER,
            t,
            n as i32,
            k as i32,
            1.0,
            a.as_ptr(),
            lda.max(1) as i32,
            0.0,
            g.as_mut_ptr(),
            n as i32,
        );
    }
    // mirror the upper triangle down
    for j in 0..n {
        for i in (j + 1)..n {
            g[i + j * n] = g[j + i * n];
        }
    }
}

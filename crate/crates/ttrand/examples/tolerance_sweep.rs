//! Compress a smooth 5-way function grid at a sweep of error tolerances and
//! watch the train ranks, reconstruction error, and storage footprint move
//! together.
//!
//!     cargo run --release --example tolerance_sweep

use ttrand::{gen_func_hilbert, relative_error, tt_svd};

fn main() {
    let extent = 20;
    let t = gen_func_hilbert(extent).unwrap();
    println!(
        "tensor: {}^5 grid of 1/(1 + sum of indices), {} entries",
        extent,
        t.len()
    );
    println!();
    println!("{:>8}  {:>16}  {:>12}  {:>12}  {:>8}", "eps", "ranks", "rel err", "entries", "ratio");

    for k in 1..=8 {
        let eps = 10f64.powi(-k);
        let d = tt_svd(&t, eps).unwrap();
        let re = relative_error(&t, &d.tt.contract().unwrap()).unwrap();
        let stored = d.tt.storage_len();
        let ranks = d
            .ranks
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(",");
        println!(
            "{:>8.0e}  {:>16}  {:>12.3e}  {:>12}  {:>7.1}x",
            eps,
            format!("({ranks})"),
            re,
            stored,
            t.len() as f64 / stored as f64
        );
    }
}

//! Estimate train ranks without decomposing: the greedy allocator looks at
//! the singular spectra of all sequential unfoldings once, then spends a
//! global error budget one rank increment at a time where it pays most.
//!
//!     cargo run --release --example greedy_budget

use ttrand::{gen_func_hilbert, greedy_tt_rank, tt_svd};

fn main() {
    let t = gen_func_hilbert(20).unwrap();
    println!("tensor: 20^5 grid of 1/(1 + sum of indices)");
    println!();
    println!("{:>8}  {:>16}  {:>16}", "eps", "svd ranks", "greedy ranks");

    for k in 1..=6 {
        let eps = 10f64.powi(-k);
        let svd = tt_svd(&t, eps).unwrap();
        let greedy = greedy_tt_rank(&t, eps).unwrap();
        let fmt = |r: &[usize]| {
            let s = r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            format!("({s})")
        };
        println!("{:>8.0e}  {:>16}  {:>16}", eps, fmt(&svd.ranks), fmt(&greedy));
    }
    println!();
    println!("Greedy charges each mode its full unfolding tail (every direction");
    println!("at or beyond the current rank), so its allocation dominates the");
    println!("sequential-SVD ranks entrywise — a safe budget for the randomized");
    println!("fixed-rank solvers to run against.");
}

//! Compare the two randomized fixed-rank variants: sketching the wide stage
//! matrix from the right versus sketching its small Gram factor from the
//! left. The Gram variant touches the long dimension only through matrix
//! products it already needs, at the price of a mandatory power round.
//!
//!     cargo run --release --example gram_sketching

use std::time::Instant;

use ttrand::{
    gen_tt_noise, rand_tt_fixed_rank, rand_tt_fixed_rank_gram, relative_error, FixedRankParams,
    SketchKind,
};

fn main() {
    let t = gen_tt_noise(&[18; 5], &[4, 4, 4, 4], 1e-5, 55).unwrap();
    let ranks = vec![4usize; 4];
    println!("tensor: 18^5 with planted ranks (4,4,4,4) and 1e-5 noise");
    println!();
    println!("{:>22}  {:>12}  {:>10}", "variant", "rel err", "wall");

    for power in [1usize, 2] {
        let p = FixedRankParams {
            ranks: ranks.clone(),
            oversample: 8,
            power,
            sketch: SketchKind::Gaussian,
            seed: 2,
        };

        let start = Instant::now();
        let plain = rand_tt_fixed_rank(&t, &p).unwrap();
        let plain_wall = start.elapsed();
        let plain_re = relative_error(&t, &plain.tt.contract().unwrap()).unwrap();
        println!("{:>22}  {plain_re:>12.3e}  {plain_wall:>8.1?}", format!("right sketch, q={power}"));

        let start = Instant::now();
        let gram = rand_tt_fixed_rank_gram(&t, &p).unwrap();
        let gram_wall = start.elapsed();
        let gram_re = relative_error(&t, &gram.tt.contract().unwrap()).unwrap();
        println!("{:>22}  {gram_re:>12.3e}  {gram_wall:>8.1?}", format!("gram sketch, q={power}"));
    }
    println!();
    println!("The Gram variant draws its test matrix against the short side of");
    println!("each stage, so the random draw is tiny; q=0 is rejected because");
    println!("without a power round the sketch never sees the matrix at all.");
}

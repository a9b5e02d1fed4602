//! Full storage round trip: synthesize a tensor, write it to the dense
//! on-disk format, read it back, decompose, write the train format, read
//! that back, and confirm the reconstruction still meets the budget.
//!
//!     cargo run --release --example file_roundtrip

use ttrand::{
    gen_tt_noise, read_dense, relative_error, tt_read, tt_svd, tt_write, write_dense,
};

fn main() {
    let dir = std::env::temp_dir().join("ttrand_roundtrip");
    std::fs::create_dir_all(&dir).unwrap();
    let dense_path = dir.join("tensor.dnt");
    let train_path = dir.join("tensor.ttc");

    let t = gen_tt_noise(&[12; 4], &[3, 3, 3], 1e-6, 99).unwrap();
    write_dense(&t, &dense_path).unwrap();
    let bytes = std::fs::metadata(&dense_path).unwrap().len();
    println!("wrote {} ({} bytes)", dense_path.display(), bytes);

    let back = read_dense(&dense_path).unwrap();
    assert_eq!(back, t, "dense round trip must be bit-exact");
    println!("read it back bit-exact");

    let d = tt_svd(&back, 1e-4).unwrap();
    tt_write(&d.tt, &train_path).unwrap();
    let tt_bytes = std::fs::metadata(&train_path).unwrap().len();
    println!(
        "decomposed to ranks {:?}, wrote {} ({} bytes, {:.1}x smaller)",
        d.ranks,
        train_path.display(),
        tt_bytes,
        bytes as f64 / tt_bytes as f64
    );

    let train = tt_read(&train_path).unwrap();
    assert_eq!(train, d.tt, "train round trip must be bit-exact");
    let re = relative_error(&t, &train.contract().unwrap()).unwrap();
    println!("reloaded train reconstructs to relative error {re:.3e}");

    std::fs::remove_dir_all(&dir).ok();
}

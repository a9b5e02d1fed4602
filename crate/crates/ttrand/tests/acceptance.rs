//! End-to-end acceptance gates. Each test checks one shipping criterion and
//! prints a single PASS line on success (visible with `--nocapture`); a
//! failure panics with a FAIL line. Tolerances are pinned here, in code.

use std::time::Instant;

use ttrand::rng::StreamRng;
use ttrand::{
    adaptive_rand_tt, apply_kr_via_tenvecmult, error_estimate_gram, gen_func_hilbert,
    gen_func_sin, gen_tt_noise, greedy_tt_rank, rand_tt_fixed_rank, rand_tt_fixed_rank_gram,
    relative_error, tt_svd, tt_svd_bound_oracle, tt_svd_fixed_rank, Decomposition, DenseTensor,
    FixedPrecisionParams, FixedRankParams, MatRef, SketchKind, SketchSpec, TTTensor,
};

fn pass(criterion: &str, detail: String) {
    println!("PASS {criterion}: {detail}");
}

/// Contract a train with left-orthonormal leading cores so the result has
/// exact interior ranks.
fn exact_rank_tensor(dims: &[usize], ranks: &[usize], seed: u64) -> DenseTensor {
    let mut rng = StreamRng::new(seed, 3);
    let mut cores = Vec::new();
    for (n, &i_n) in dims.iter().enumerate() {
        let r_in = if n == 0 { 1 } else { ranks[n - 1] };
        let r_out = if n == dims.len() - 1 { 1 } else { ranks[n] };
        let raw = ttrand::Matrix::from_fn(r_in * i_n, r_out, |_, _| rng.next_normal());
        let data = if n == dims.len() - 1 {
            raw.into_data()
        } else {
            ttrand::orthonormalize(&raw).unwrap().into_data()
        };
        cores.push(DenseTensor::new(vec![r_in, i_n, r_out], data).unwrap());
    }
    TTTensor::new(cores).unwrap().contract().unwrap()
}

fn add_noise(clean: DenseTensor, level: f64, seed: u64) -> DenseTensor {
    let mut rng = StreamRng::new(seed, 0);
    let scale = level * clean.frobenius_norm() / (clean.len() as f64).sqrt();
    let (dims, mut data) = clean.into_parts();
    for x in &mut data {
        *x += scale * rng.next_normal();
    }
    DenseTensor::new(dims, data).unwrap()
}

fn re_of(t: &DenseTensor, d: &Decomposition) -> f64 {
    relative_error(t, &d.tt.contract().unwrap()).unwrap()
}

// ------------------------------------------------------------------ 1

#[test]
fn criterion_1_smooth_function_rank_tables() {
    let eps_list = [1e-2, 1e-3, 1e-4, 1e-5];
    let svd_expected: [[usize; 4]; 4] =
        [[2, 2, 2, 2], [2, 3, 3, 2], [3, 3, 3, 3], [4, 4, 4, 4]];
    let greedy_expected: [[usize; 4]; 4] =
        [[3, 3, 3, 3], [4, 4, 4, 3], [4, 5, 4, 4], [5, 5, 5, 5]];

    let d_tensor = gen_func_hilbert(40).unwrap();
    for (k, &eps) in eps_list.iter().enumerate() {
        let d = tt_svd(&d_tensor, eps).unwrap();
        assert_eq!(
            d.ranks, svd_expected[k],
            "FAIL criterion 1: inverse-sum grid, tolerance {eps}: sequential SVD ranks {:?}, want {:?}",
            d.ranks, svd_expected[k]
        );
        let g = greedy_tt_rank(&d_tensor, eps).unwrap();
        let mut off = 0usize;
        for (a, b) in g.iter().zip(&greedy_expected[k]) {
            let diff = a.abs_diff(*b);
            assert!(
                diff <= 1,
                "FAIL criterion 1: greedy at {eps}: ranks {g:?} stray from {:?} by more than 1",
                greedy_expected[k]
            );
            off += diff;
        }
        assert!(
            off <= 1,
            "FAIL criterion 1: greedy at {eps}: ranks {g:?} differ from {:?} in more than one entry",
            greedy_expected[k]
        );
    }
    drop(d_tensor);

    let c_tensor = gen_func_sin(40).unwrap();
    let d = tt_svd(&c_tensor, 1e-2).unwrap();
    assert_eq!(
        d.ranks,
        vec![2, 2, 2, 2],
        "FAIL criterion 1: radial-sine grid at 1e-2: ranks {:?}",
        d.ranks
    );
    pass(
        "criterion 1",
        "rank tables reproduced on both 40^5 smooth-function grids".into(),
    );
}

// ------------------------------------------------------------------ 2

#[test]
fn criterion_2_sequential_svd_error_bound() {
    let mut checked = 0;
    for seed in 0..25u64 {
        let mut rng = StreamRng::new(900 + seed, 0);
        let dims: Vec<usize> = (0..4).map(|_| 2 + rng.next_below(9)).collect();
        let mut gen = StreamRng::new(901 + seed, 1);
        let t = DenseTensor::from_fn(dims, |_| gen.next_normal()).unwrap();
        let norm = t.frobenius_norm();
        for eps in [1e-1, 1e-2, 1e-3] {
            let d = tt_svd(&t, eps).unwrap();
            let err = re_of(&t, &d) * norm;
            let bound = tt_svd_bound_oracle(&t, &d.ranks).unwrap();
            assert!(
                err <= bound + 1e-10,
                "FAIL criterion 2: seed {seed} eps {eps}: error {err} above oracle bound {bound}"
            );
            assert!(
                bound <= eps * norm + 1e-10,
                "FAIL criterion 2: seed {seed} eps {eps}: oracle bound {bound} above budget {}",
                eps * norm
            );
            checked += 1;
        }
    }
    pass(
        "criterion 2",
        format!("error <= tail bound <= budget on {checked} tensor/tolerance pairs"),
    );
}

// ------------------------------------------------------------------ 3

#[test]
fn criterion_3_exact_rank_recovery_all_algorithms() {
    let dims = [6usize, 7, 8, 9];
    let want = vec![2usize, 3, 2];
    let mut runs = 0;
    for seed in 0..20u64 {
        let t = exact_rank_tensor(&dims, &want, 1000 + seed);

        let check = |name: &str, d: &Decomposition| {
            assert_eq!(
                d.ranks, want,
                "FAIL criterion 3: {name} seed {seed}: ranks {:?}",
                d.ranks
            );
            let re = re_of(&t, d);
            assert!(
                re <= 1e-6,
                "FAIL criterion 3: {name} seed {seed}: relative error {re}"
            );
        };

        check("tt_svd", &tt_svd(&t, 1e-8).unwrap());
        runs += 1;

        for kind in SketchKind::ALL {
            for power in [0usize, 1] {
                let p = FixedRankParams {
                    ranks: want.clone(),
                    oversample: 10,
                    power,
                    sketch: kind,
                    seed,
                };
                check(
                    &format!("rand {kind} q={power}"),
                    &rand_tt_fixed_rank(&t, &p).unwrap(),
                );
                runs += 1;
            }
        }

        for power in [1usize, 2] {
            let p = FixedRankParams {
                ranks: want.clone(),
                oversample: 10,
                power,
                sketch: SketchKind::Gaussian,
                seed,
            };
            check(
                &format!("rand-gram q={power}"),
                &rand_tt_fixed_rank_gram(&t, &p).unwrap(),
            );
            runs += 1;
        }

        for block in [1usize, 10] {
            let p = FixedPrecisionParams {
                eps: 1e-6,
                block,
                power: 0,
                sketch: SketchKind::Gaussian,
                seed,
            };
            check(
                &format!("adaptive b={block}"),
                &adaptive_rand_tt(&t, &p).unwrap(),
            );
            runs += 1;
        }
    }
    pass(
        "criterion 3",
        format!("ranks (2,3,2) and error <= 1e-6 recovered in {runs}/{runs} runs"),
    );
}

// ------------------------------------------------------------------ 4

#[test]
fn criterion_4_power_iteration_benefit() {
    let t = gen_tt_noise(&[20; 5], &[5, 5, 5, 5], 1e-4, 42).unwrap();
    let trials = 20u64;
    for kind in [SketchKind::Gaussian, SketchKind::KrGaussian] {
        let mut mean = [0.0f64; 2];
        for seed in 0..trials {
            for (slot, power) in [0usize, 1].into_iter().enumerate() {
                let p = FixedRankParams {
                    ranks: vec![3, 3, 3, 3],
                    oversample: 10,
                    power,
                    sketch: kind,
                    seed,
                };
                mean[slot] += re_of(&t, &rand_tt_fixed_rank(&t, &p).unwrap());
            }
        }
        assert!(
            mean[1] <= mean[0],
            "FAIL criterion 4: {kind}: mean error with one power round {} above plain {}",
            mean[1] / trials as f64,
            mean[0] / trials as f64
        );
    }
    pass(
        "criterion 4",
        format!("one power round never hurt the mean error over {trials} paired seeds, both sketches"),
    );
}

// ------------------------------------------------------------------ 5

/// Recompute per-stage residuals by replaying the cores against the input.
fn stage_residuals(t: &DenseTensor, tt: &TTTensor) -> Vec<f64> {
    let dims = t.dims();
    let mut a = t.unfold_seq(1).unwrap();
    let mut out = Vec::new();
    for (n, core) in tt.cores()[..dims.len() - 1].iter().enumerate() {
        let rows = core.dims()[0] * core.dims()[1];
        let q = MatRef::new(rows, core.dims()[2], core.data()).unwrap();
        let qta = q.matmul_tn(a.view());
        let back = q.matmul(qta.view());
        let mut resid = 0.0;
        for (x, y) in a.data().iter().zip(back.data()) {
            resid += (x - y) * (x - y);
        }
        out.push(resid.sqrt());
        let cols = qta.cols();
        a = if n + 2 < dims.len() {
            qta.reshaped(core.dims()[2] * dims[n + 1], cols / dims[n + 1])
                .unwrap()
        } else {
            qta
        };
    }
    out
}

#[test]
fn criterion_5_telescoping_and_estimator() {
    let clean = exact_rank_tensor(&[10, 10, 10, 10], &[3, 3, 3], 7);
    let t = add_noise(clean, 1e-3, 8);
    assert!(t.len() <= 100_000);
    let norm = t.frobenius_norm();

    let runs: Vec<(&str, Decomposition)> = vec![
        ("tt_svd", tt_svd(&t, 1e-2).unwrap()),
        ("tt_svd_fixed_rank", tt_svd_fixed_rank(&t, &[3, 3, 3]).unwrap()),
        (
            "rand",
            rand_tt_fixed_rank(
                &t,
                &FixedRankParams {
                    ranks: vec![3, 3, 3],
                    oversample: 10,
                    power: 1,
                    sketch: SketchKind::Gaussian,
                    seed: 5,
                },
            )
            .unwrap(),
        ),
        (
            "rand_gram",
            rand_tt_fixed_rank_gram(
                &t,
                &FixedRankParams {
                    ranks: vec![3, 3, 3],
                    oversample: 10,
                    power: 1,
                    sketch: SketchKind::Gaussian,
                    seed: 5,
                },
            )
            .unwrap(),
        ),
        (
            "adaptive",
            adaptive_rand_tt(
                &t,
                &FixedPrecisionParams {
                    eps: 1e-2,
                    block: 2,
                    power: 0,
                    sketch: SketchKind::Gaussian,
                    seed: 5,
                },
            )
            .unwrap(),
        ),
    ];

    for (name, d) in &runs {
        let total = re_of(&t, d) * norm;
        let stages = stage_residuals(&t, &d.tt);
        let sum: f64 = stages.iter().sum();
        assert!(
            total <= sum + 1e-8,
            "FAIL criterion 5: {name}: total residual {total} above stage sum {sum}"
        );
        let (est, floor_ok) = error_estimate_gram(&d.stage_norms, 1e-2, 1e-2);
        assert!(floor_ok, "FAIL criterion 5: {name}: fp floor not satisfied");
        let direct = total * total;
        assert!(
            (est - direct).abs() <= 1e-6 * direct,
            "FAIL criterion 5: {name}: estimator {est} vs direct {direct}"
        );
    }
    pass(
        "criterion 5",
        format!("telescoping bound and 1e-6 estimator agreement on {} algorithms", runs.len()),
    );
}

// ------------------------------------------------------------------ 6

#[test]
fn criterion_6_rank_dominance() {
    let tensors: Vec<DenseTensor> = (0..10u64)
        .map(|k| add_noise(exact_rank_tensor(&[6; 5], &[3, 3, 3, 3], 600 + k), 1e-3, 700 + k))
        .collect();

    for eps in [0.1, 0.05, 0.01] {
        let mut wins = 0u32;
        let mut runs = 0u32;
        for (k, t) in tensors.iter().enumerate() {
            let base = tt_svd(t, eps).unwrap().ranks;
            let g = greedy_tt_rank(t, eps).unwrap();
            assert!(
                g.iter().zip(&base).all(|(a, b)| a >= b),
                "FAIL criterion 6: greedy {g:?} below sequential {base:?} on tensor {k} at {eps}"
            );
            for seed in 0..4u64 {
                let p = FixedPrecisionParams {
                    eps,
                    block: 10,
                    power: 0,
                    sketch: SketchKind::Gaussian,
                    seed,
                };
                let a = adaptive_rand_tt(t, &p).unwrap();
                runs += 1;
                if a.ranks.iter().zip(&base).all(|(x, y)| x >= y) {
                    wins += 1;
                }
            }
        }
        assert_eq!(runs, 40);
        assert!(
            wins * 100 >= runs * 95,
            "FAIL criterion 6: adaptive dominated in only {wins}/{runs} runs at {eps}"
        );
    }
    pass(
        "criterion 6",
        "greedy always and adaptive in >= 95% of 40 runs dominate the sequential ranks, all tolerances".into(),
    );
}

// ------------------------------------------------------------------ 7

#[test]
fn criterion_7_sketch_oracle_equivalence() {
    let mut rng = StreamRng::new(77, 0);
    for (front, dims) in [(64usize, vec![4usize, 6]), (7, vec![2, 3, 4])] {
        let t = DenseTensor::from_fn(
            std::iter::once(front).chain(dims.iter().copied()).collect(),
            |_| rng.next_normal(),
        )
        .unwrap();
        let cols: usize = dims.iter().product();
        let a = MatRef::new(front, cols, t.data()).unwrap();
        let scale = (front as f64 * cols as f64).sqrt();
        for kind in SketchKind::ALL {
            let ell = if kind == SketchKind::Sdct { 12.min(cols) } else { 12 };
            let spec = SketchSpec::new(kind, dims.clone(), ell, 3, 1).unwrap();
            let op = spec.draw_fresh().unwrap();
            let fast = op.apply_right(a).unwrap();
            let dense = a.matmul(op.materialize().view());
            let mut diff = 0.0f64;
            let mut ref_sq = 0.0f64;
            for (x, y) in fast.data().iter().zip(dense.data()) {
                diff += (x - y) * (x - y);
                ref_sq += y * y;
            }
            assert!(
                diff.sqrt() <= 1e-10 * ref_sq.sqrt().max(scale),
                "FAIL criterion 7: {kind} fast apply strays from the dense product"
            );
            if kind == SketchKind::KrGaussian {
                let factors = match &op {
                    ttrand::SketchOperator::Kr { factors } => factors.clone(),
                    _ => unreachable!(),
                };
                let tv = apply_kr_via_tenvecmult(front, &dims, t.data(), &factors).unwrap();
                let mut dtv = 0.0f64;
                for (x, y) in tv.data().iter().zip(dense.data()) {
                    dtv += (x - y) * (x - y);
                }
                assert!(
                    dtv.sqrt() <= 1e-10 * ref_sq.sqrt().max(scale),
                    "FAIL criterion 7: column-chain contraction strays from the dense product"
                );
            }
        }
    }
    pass(
        "criterion 7",
        "fast applies match dense materialization for all five sketch kinds".into(),
    );
}

// ------------------------------------------------------------------ 8

#[test]
fn criterion_8_determinism_and_speed() {
    // byte-identical repeated runs, through the binary, at thread count 1
    let dir = tempfile::tempdir().unwrap();
    let tensor_path = dir.path().join("t.dnt");
    let bin = env!("CARGO_BIN_EXE_ttrand");
    let gen = std::process::Command::new(bin)
        .env("TT_SKETCH_THREADS", "1")
        .args([
            "gen",
            "--family",
            "tt-noise",
            "--dims",
            "8,8,8,8",
            "--core-ranks",
            "3,3,3",
            "--gamma",
            "1e-4",
            "--seed",
            "7",
            "--out",
        ])
        .arg(&tensor_path)
        .output()
        .unwrap();
    assert!(gen.status.success(), "FAIL criterion 8: gen failed: {}", String::from_utf8_lossy(&gen.stderr));

    let mut outputs = Vec::new();
    for run in 0..2 {
        let tt_path = dir.path().join(format!("out{run}.ttc"));
        let out = std::process::Command::new(bin)
            .env("TT_SKETCH_THREADS", "1")
            .args([
                "decompose",
                "--in",
            ])
            .arg(&tensor_path)
            .args([
                "--method",
                "rand",
                "--sketch",
                "kr-gaussian",
                "--ranks",
                "3,3,3",
                "--seed",
                "5",
                "--verify",
                "--out",
            ])
            .arg(&tt_path)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "FAIL criterion 8: decompose failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let bytes = std::fs::read(&tt_path).unwrap();
        let csv = String::from_utf8(out.stdout).unwrap();
        outputs.push((bytes, csv));
    }
    assert_eq!(
        outputs[0].0, outputs[1].0,
        "FAIL criterion 8: repeated runs differ in train-file bytes"
    );
    let strip_wall = |csv: &str| -> Vec<String> {
        csv.lines()
            .map(|line| {
                let mut fields: Vec<&str> = line.split(',').collect();
                if fields.len() == 15 && fields[12] != "wall_ms" {
                    fields[12] = "-";
                }
                fields.join(",")
            })
            .collect()
    };
    assert_eq!(
        strip_wall(&outputs[0].1),
        strip_wall(&outputs[1].1),
        "FAIL criterion 8: repeated runs differ in the report beyond wall_ms"
    );

    // speed smoke: the structured-sketch randomized path beats the
    // sequential SVD at prescribed ranks, three runs out of three
    let t = gen_tt_noise(&[20; 5], &[10, 10, 10, 10], 1e-4, 11).unwrap();
    let ranks = vec![10usize; 4];
    for run in 0..3u64 {
        let start = Instant::now();
        let base = tt_svd_fixed_rank(&t, &ranks).unwrap();
        let svd_time = start.elapsed();
        let p = FixedRankParams {
            ranks: ranks.clone(),
            oversample: 10,
            power: 0,
            sketch: SketchKind::KrGaussian,
            seed: run,
        };
        let start = Instant::now();
        let fast = rand_tt_fixed_rank(&t, &p).unwrap();
        let rand_time = start.elapsed();
        assert_eq!(base.ranks, fast.ranks);
        assert!(
            rand_time < svd_time,
            "FAIL criterion 8: run {run}: randomized {rand_time:?} not faster than sequential {svd_time:?}"
        );
    }
    pass(
        "criterion 8",
        "byte-identical repeats and 3/3 randomized speed wins at 20^5".into(),
    );
}

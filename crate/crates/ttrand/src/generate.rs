//! Synthetic test tensors: random tensor trains with additive Gaussian
//! noise (absolute or SNR-scaled) and two smooth-function discretizations.
//! Every generator is a pure function of its arguments and seed.

use crate::rng::StreamRng;
use crate::tensor::DenseTensor;
use crate::tt::TTTensor;
use crate::{Error, Result};

/// Which synthetic family to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenFamily {
    /// Random train plus noise scaled by a relative factor gamma.
    TtNoise,
    /// Random train plus noise scaled to a target signal-to-noise ratio.
    TtSnr,
    /// 5-way grid of sin(sqrt(sum of squared normalized coordinates)).
    FuncSin,
    /// 5-way grid of (I - 1) / (I + i_1 + ... + i_5).
    FuncHilbert,
}

impl GenFamily {
    pub const ALL: [GenFamily; 4] = [
        GenFamily::TtNoise,
        GenFamily::TtSnr,
        GenFamily::FuncSin,
        GenFamily::FuncHilbert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GenFamily::TtNoise => "tt-noise",
            GenFamily::TtSnr => "tt-snr",
            GenFamily::FuncSin => "func-sin",
            GenFamily::FuncHilbert => "func-hilbert",
        }
    }
}

impl std::fmt::Display for GenFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GenFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GenFamily::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown generator family '{s}'")))
    }
}

/// A fully described generation request; the CLI maps its flags onto this.
#[derive(Debug, Clone)]
pub struct GenSpec {
    pub family: GenFamily,
    /// Mode extents for the train-based families.
    pub dims: Vec<usize>,
    /// Interior core ranks for the train-based families.
    pub core_ranks: Vec<usize>,
    /// Relative noise level for [`GenFamily::TtNoise`].
    pub gamma: f64,
    /// Target ratio in dB for [`GenFamily::TtSnr`].
    pub snr_db: f64,
    /// Grid extent per mode for the function families.
    pub extent: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn build(&self) -> Result<DenseTensor> {
        match self.family {
            GenFamily::TtNoise => gen_tt_noise(&self.dims, &self.core_ranks, self.gamma, self.seed),
            GenFamily::TtSnr => gen_tt_snr(&self.dims, &self.core_ranks, self.snr_db, self.seed),
            GenFamily::FuncSin => gen_func_sin(self.extent),
            GenFamily::FuncHilbert => gen_func_hilbert(self.extent),
        }
    }
}

/// Contract a train whose cores hold i.i.d. standard normal entries.
fn random_tt(dims: &[usize], core_ranks: &[usize], rng: &mut StreamRng) -> Result<DenseTensor> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("dims must be non-empty".into()));
    }
    if core_ranks.len() != dims.len().saturating_sub(1) {
        return Err(Error::InvalidArgument(format!(
            "{} core ranks given for a {}-way tensor, expected {}",
            core_ranks.len(),
            dims.len(),
            dims.len() - 1
        )));
    }
    if core_ranks.contains(&0) {
        return Err(Error::InvalidArgument("core ranks must be at least 1".into()));
    }
    let mut cores = Vec::with_capacity(dims.len());
    for (n, &i_n) in dims.iter().enumerate() {
        let r_in = if n == 0 { 1 } else { core_ranks[n - 1] };
        let r_out = if n == dims.len() - 1 { 1 } else { core_ranks[n] };
        let core = DenseTensor::from_fn(vec![r_in, i_n, r_out], |_| rng.next_normal())?;
        cores.push(core);
    }
    TTTensor::new(cores)?.contract()
}

/// Random train plus white noise at relative level `gamma`: the noise is
/// scaled so its expected norm is gamma times the clean train's norm.
pub fn gen_tt_noise(dims: &[usize], core_ranks: &[usize], gamma: f64, seed: u64) -> Result<DenseTensor> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise level must be finite and non-negative, got {gamma}"
        )));
    }
    let mut core_rng = StreamRng::new(seed, 0);
    let clean = random_tt(dims, core_ranks, &mut core_rng)?;
    if gamma == 0.0 {
        return Ok(clean);
    }
    let scale = gamma * clean.frobenius_norm() / (clean.len() as f64).sqrt();
    let mut noise_rng = StreamRng::new(seed, 1);
    let (dims, mut data) = clean.into_parts();
    for x in &mut data {
        *x += scale * noise_rng.next_normal();
    }
    DenseTensor::new(dims, data)
}

/// Random train plus white noise scaled to a signal-to-noise ratio: beta is
/// chosen so 10 log10(||P||^2 / ||beta N||^2) equals `snr_db`, with P the
/// clean train and N the noise draw.
pub fn gen_tt_snr(dims: &[usize], core_ranks: &[usize], snr_db: f64, seed: u64) -> Result<DenseTensor> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "signal-to-noise target must be finite, got {snr_db}"
        )));
    }
    let mut core_rng = StreamRng::new(seed, 0);
    let clean = random_tt(dims, core_ranks, &mut core_rng)?;
    let mut noise_rng = StreamRng::new(seed, 1);
    let noise: Vec<f64> = (0..clean.len()).map(|_| noise_rng.next_normal()).collect();
    let noise_norm = crate::tensor::sum_sq(&noise).sqrt();
    let beta = if noise_norm > 0.0 {
        clean.frobenius_norm() / (noise_norm * 10f64.powf(snr_db / 20.0))
    } else {
        0.0
    };
    let (dims, mut data) = clean.into_parts();
    for (x, n) in data.iter_mut().zip(&noise) {
        *x += beta * n;
    }
    DenseTensor::new(dims, data)
}

fn require_extent(extent: usize) -> Result<()> {
    if extent < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid extent must be at least 2, got {extent}"
        )));
    }
    Ok(())
}

/// 5-way discretization of sin(sqrt(x_1^2 + ... + x_5^2)) on a uniform grid
/// of [0, 1] per axis with `extent` points.
pub fn gen_func_sin(extent: usize) -> Result<DenseTensor> {
    require_extent(extent)?;
    let h = 1.0 / (extent - 1) as f64;
    DenseTensor::from_fn(vec![extent; 5], |idx| {
        let s: f64 = idx.iter().map(|&i| (i as f64 * h).powi(2)).sum();
        s.sqrt().sin()
    })
}

/// 5-way discretization of (I - 1) / (I + i_1 + ... + i_5) with 1-based
/// indices running to I = `extent`.
pub fn gen_func_hilbert(extent: usize) -> Result<DenseTensor> {
    require_extent(extent)?;
    let num = (extent - 1) as f64;
    DenseTensor::from_fn(vec![extent; 5], |idx| {
        let s: usize = idx.iter().map(|&i| i + 1).sum();
        num / (extent + s) as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::tt_svd;
    use crate::metrics::relative_error;

    #[test]
    fn noiseless_train_has_bounded_ranks() {
        let t = gen_tt_noise(&[6, 6, 6, 6], &[3, 4, 3], 0.0, 9).unwrap();
        let d = tt_svd(&t, 1e-8).unwrap();
        for (got, cap) in d.ranks.iter().zip(&[3usize, 4, 3]) {
            assert!(got <= cap, "ranks {:?} exceed requested {:?}", d.ranks, [3, 4, 3]);
        }
        assert!(relative_error(&t, &d.tt.contract().unwrap()).unwrap() <= 1e-8);
    }

    #[test]
    fn noise_level_lands_near_gamma() {
        let gamma = 1e-3;
        let clean = gen_tt_noise(&[10, 10, 10, 10], &[5, 5, 5], 0.0, 21).unwrap();
        let noisy = gen_tt_noise(&[10, 10, 10, 10], &[5, 5, 5], gamma, 21).unwrap();
        let re = relative_error(&clean, &noisy).unwrap();
        assert!(
            (re - gamma).abs() <= 0.05 * gamma,
            "noise level {re} strays from target {gamma}"
        );
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_tt_noise(&[5, 5, 5], &[2, 2], 1e-4, 3).unwrap();
        let b = gen_tt_noise(&[5, 5, 5], &[2, 2], 1e-4, 3).unwrap();
        assert_eq!(a.data(), b.data());
        let c = gen_tt_noise(&[5, 5, 5], &[2, 2], 1e-4, 4).unwrap();
        assert_ne!(a.data(), c.data());

        let x = gen_tt_snr(&[5, 5, 5], &[2, 2], 10.0, 3).unwrap();
        let y = gen_tt_snr(&[5, 5, 5], &[2, 2], 10.0, 3).unwrap();
        assert_eq!(x.data(), y.data());
    }

    #[test]
    fn snr_scaling_is_exact_at_zero_db() {
        let seed = 5;
        let dims = [6usize, 6, 6, 6];
        let clean = gen_tt_noise(&dims, &[3, 3, 3], 0.0, seed).unwrap();
        let mixed = gen_tt_snr(&dims, &[3, 3, 3], 0.0, seed).unwrap();
        // at 0 dB the added noise norm must equal the signal norm
        let mut diff_sq = 0.0;
        for (a, b) in mixed.data().iter().zip(clean.data()) {
            diff_sq += (a - b) * (a - b);
        }
        let ratio = diff_sq.sqrt() / clean.frobenius_norm();
        assert!((ratio - 1.0).abs() <= 1e-12, "0 dB noise ratio {ratio}");
    }

    #[test]
    fn high_snr_approaches_the_clean_train() {
        let clean = gen_tt_noise(&[6, 6, 6], &[3, 3], 0.0, 8).unwrap();
        let mixed = gen_tt_snr(&[6, 6, 6], &[3, 3], 300.0, 8).unwrap();
        assert!(relative_error(&clean, &mixed).unwrap() <= 1e-14);
    }

    #[test]
    fn snr_rejects_non_finite_targets() {
        assert!(gen_tt_snr(&[4, 4], &[2], f64::NAN, 0).is_err());
        assert!(gen_tt_snr(&[4, 4], &[2], f64::INFINITY, 0).is_err());
    }

    #[test]
    fn train_families_validate_shapes() {
        assert!(gen_tt_noise(&[], &[], 0.1, 0).is_err());
        assert!(gen_tt_noise(&[4, 4], &[2, 2], 0.1, 0).is_err());
        assert!(gen_tt_noise(&[4, 4], &[0], 0.1, 0).is_err());
        assert!(gen_tt_noise(&[4, 4], &[2], -0.5, 0).is_err());
    }

    #[test]
    fn sin_grid_values() {
        let t = gen_func_sin(3).unwrap();
        assert_eq!(t.dims(), &[3, 3, 3, 3, 3]);
        assert_eq!(t.entry(&[0, 0, 0, 0, 0]), 0.0);
        // opposite corner: all coordinates 1, radius sqrt(5)
        let far = t.entry(&[2, 2, 2, 2, 2]);
        assert!((far - 5f64.sqrt().sin()).abs() <= 1e-15);
    }

    #[test]
    fn hilbert_grid_values() {
        let t = gen_func_hilbert(40).unwrap();
        let origin = t.entry(&[0, 0, 0, 0, 0]);
        assert!((origin - 39.0 / 45.0).abs() <= 1e-15);
        assert!(gen_func_hilbert(1).is_err());
        assert!(gen_func_sin(0).is_err());
    }

    #[test]
    fn spec_dispatch_covers_all_families() {
        for family in GenFamily::ALL {
            let spec = GenSpec {
                family,
                dims: vec![4, 4, 4],
                core_ranks: vec![2, 2],
                gamma: 1e-4,
                snr_db: 5.0,
                extent: 3,
                seed: 1,
            };
            let t = spec.build().unwrap();
            assert!(t.frobenius_norm().is_finite());
            assert_eq!(family.name().parse::<GenFamily>().unwrap(), family);
        }
        assert!("nope".parse::<GenFamily>().is_err());
    }
}

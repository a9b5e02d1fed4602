//! Counter-based, stream-splittable random number generation.
//!
//! Every random draw in this crate flows through [`StreamRng`], a counter-mode
//! generator built on the SplitMix64 finalizer. A stream is identified by
//! `(seed, stream_id)`; the i-th output is a pure function of those three
//! values, so sequences are bit-reproducible across platforms and runs, and
//! distinct stages of an algorithm can draw from independent streams without
//! coordinating counter positions.
//!
//! Normal variates use the inverse-CDF method (Wichura's AS241 double
//! precision approximation) on the stream's uniforms instead of a rejection
//! sampler, so the number of raw draws consumed per variate is fixed and the
//! output is identical everywhere.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0x1F83_D9AB_FB41_BD6B;

/// SplitMix64 finalizer: a full-avalanche 64-bit mix.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A seekable random stream: output i is `mix64(key + (i+1)*GOLDEN)` where
/// `key` is derived from `(seed, stream_id)` by avalanche mixing.
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: u64,
    ctr: u64,
}

impl StreamRng {
    /// Open stream `stream_id` of the generator family identified by `seed`.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let key = mix64(seed ^ mix64(stream_id.wrapping_mul(GOLDEN) ^ STREAM_SALT));
        StreamRng { key, ctr: 0 }
    }

    /// Next raw 64-bit word.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.ctr = self.ctr.wrapping_add(1);
        mix64(self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN)))
    }

    /// Uniform draw strictly inside (0, 1), using the top 53 bits.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via the inverse CDF.
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.next_open01())
    }

    /// Uniform integer in `[0, n)`. Uses plain reduction; the bias is below
    /// 2^-32 for every n this crate draws (hash buckets and sample indices).
    #[inline]
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Random sign, +1.0 or -1.0 with equal probability.
    #[inline]
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Fill `buf` with standard normal draws.
    pub fn fill_normal(&mut self, buf: &mut [f64]) {
        for x in buf.iter_mut() {
            *x = self.next_normal();
        }
    }

    /// Sample `k` distinct indices from `[0, n)`, returned sorted ascending.
    /// Uses Floyd's algorithm, so memory is O(k) regardless of n.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} distinct values from {n}");
        let mut chosen = std::collections::HashSet::with_capacity(k);
        for j in (n - k)..n {
            let t = self.next_below(j + 1);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        let mut out: Vec<usize> = chosen.into_iter().collect();
        out.sort_unstable();
        out
    }
}

/// Inverse of the standard normal CDF (quantile function), AS241 "PPND16".
/// Relative accuracy is close to machine precision over (0, 1); the argument
/// must lie strictly inside the open interval.
// the rational-approximation coefficients are kept exactly as published
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "quantile argument must be in (0,1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        // central region: rational approximation in r = 0.180625 - q^2
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r
            + 6.726_577_092_700_870_1e4)
            * r
            + 4.592_195_393_154_987_1e4)
            * r
            + 1.373_169_376_550_946_1e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_608)
            * q;
        let den = ((((((5.226_495_278_852_854_6e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_6e4)
            * r
            + 5.394_196_021_424_751_1e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    // tail regions: r = sqrt(-ln(min(p, 1-p)))
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        let r = r - 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_9e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_8e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

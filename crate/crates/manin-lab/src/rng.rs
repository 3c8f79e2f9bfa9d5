//! Counter-based deterministic randomness.
//!
//! Every draw is a pure function of `(seed, index)`: the generator has no
//! mutable state, so a sample stream can be split across any number of
//! workers at any boundaries without changing a single value.  This is what
//! makes the Monte-Carlo estimators reproducible bit-for-bit under
//! `--workers 1`, `2`, or `8`.

/// SplitMix64 evaluated at the `index`-th state of the stream seeded by
/// `seed` (state `k` is `seed + k·φ` with φ the 64-bit golden ratio).
#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    seed: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// The `index`-th 64-bit output.
    pub fn u64_at(&self, index: u64) -> u64 {
        let mut z = self
            .seed
            .wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random mantissa bits.
    pub fn f64_at(&self, index: u64) -> f64 {
        (self.u64_at(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1)`.
    pub fn f64_signed_at(&self, index: u64) -> f64 {
        2.0 * self.f64_at(index) - 1.0
    }

    /// Uniform integer in `lo..=hi` (widening-multiply range reduction; the
    /// bias is 2⁻⁶⁴-scale, irrelevant at desk sample sizes).
    pub fn int_in_at(&self, index: u64, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi as i128 - lo as i128 + 1) as u128;
        let v = (self.u64_at(index) as u128 * span) >> 64;
        (lo as i128 + v as i128) as i64
    }
}

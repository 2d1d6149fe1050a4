//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(master seed, stream id, step, counter)`,
//! so a value can be produced on any thread, in any order, and still come out
//! identical. Streams are keyed by chaining the SplitMix64 finalizer over the
//! key components; within a stream, draw `k` is the SplitMix64 output at
//! position `k`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_MUL: u64 = 0xD1B5_4A32_D192_ED03;
const STEP_MUL: u64 = 0xAEF1_7502_108E_F2D9;

/// SplitMix64 output mixing function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A keyed stream of random draws addressed by counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
}

impl Stream {
    #[inline]
    pub fn new(seed: u64, stream: u64, step: u64) -> Self {
        let mut key = mix64(seed.wrapping_add(GOLDEN_GAMMA));
        key = mix64(key ^ stream.wrapping_mul(STREAM_MUL));
        key = mix64(key ^ step.wrapping_mul(STEP_MUL));
        Stream { key }
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn unit_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`; returns `lo` when the interval is empty.
    #[inline]
    pub fn uniform_at(&self, counter: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit_at(counter)
    }
}

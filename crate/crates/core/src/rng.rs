//! Counter-based uniform random numbers.
//!
//! Every variate is a pure function of (seed, sample index, coordinate index),
//! so a Monte Carlo loop draws identical numbers regardless of how samples are
//! partitioned across threads or in what order they are evaluated. Streams for
//! different purposes are separated by deriving sub-seeds, never by sharing a
//! mutable generator.

/// The 64-bit finalizer from splitmix64: a full-avalanche bijection.
#[inline(always)]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a parent seed and a purpose tag.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    mix(mix(seed) ^ mix(tag ^ 0xA076_1D64_78BD_642F))
}

/// A keyed counter stream: stateless, cheap to copy, thread-safe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counter {
    key: u64,
}

impl Counter {
    pub fn new(seed: u64) -> Self {
        Counter { key: mix(seed) }
    }

    /// A derived stream that never collides with the parent or its siblings.
    pub fn fork(&self, tag: u64) -> Self {
        Counter {
            key: mix(self.key ^ mix(tag ^ 0xE703_7ED1_A0B4_28DB)),
        }
    }

    #[inline(always)]
    fn word(&self, r: u64, j: u64) -> u64 {
        mix(mix(self.key ^ mix(r)) ^ mix(j ^ 0x8EBC_6AF0_9C88_C6E3))
    }

    /// Uniform in the open interval (0, 1), indexed by (sample, coordinate).
    #[inline(always)]
    pub fn uniform(&self, r: u64, j: u64) -> f64 {
        to_unit(self.word(r, j))
    }

    /// Uniform in (0, 1) under a third index (attempt counters, etc.).
    #[inline(always)]
    pub fn uniform3(&self, r: u64, j: u64, k: u64) -> f64 {
        to_unit(mix(self.word(r, j) ^ mix(k ^ 0x2545_F491_4F6C_DD1D)))
    }
}

/// Maps a 64-bit word to (0, 1): 53 mantissa bits centered on half-steps,
/// so neither endpoint is reachable.
#[inline(always)]
fn to_unit(w: u64) -> f64 {
    ((w >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

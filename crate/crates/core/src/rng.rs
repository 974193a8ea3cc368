//! Deterministic stream derivation.
//!
//! Every stochastic operation takes a single `u64` seed and derives
//! independent substreams from `(seed, channel, index...)` tags. Two calls
//! with the same tags always see the same stream, replicate `i` never shares
//! state with replicate `j`, and parallel reductions stay bit-reproducible
//! because each work item owns its stream.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Channel tags. Fixed numbering is part of the determinism contract.
pub(crate) mod channel {
    pub const BROWNIAN: u64 = 1;
    pub const JUMP_TIMES: u64 = 2;
    pub const JUMP_SIZES: u64 = 3;
    pub const REPLICATE: u64 = 4;
    pub const INIT: u64 = 5;
    pub const SEGMENT: u64 = 6;
    pub const PRIOR_DRIFT: u64 = 7;
    pub const PRIOR_LEVY: u64 = 8;
    pub const TRANSITION: u64 = 9;
    pub const CHAIN: u64 = 10;
    pub const AUX: u64 = 11;
    pub const METRIC: u64 = 12;
    pub const STATIONARY: u64 = 13;
    pub const PROBE: u64 = 14;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mix a seed with a tag list into a fresh 64-bit key.
#[inline]
pub(crate) fn derive_key(seed: u64, tags: &[u64]) -> u64 {
    let mut k = splitmix64(seed ^ 0x6a09e667f3bcc908);
    for &t in tags {
        k = splitmix64(k ^ splitmix64(t.wrapping_add(0x243f6a8885a308d3)));
    }
    k
}

/// A ChaCha8 stream keyed by `(seed, tags...)`.
#[inline]
pub(crate) fn derive_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, tags))
}

//! Seed derivation for independent random streams.
//!
//! Every stochastic stage draws from a ChaCha8 stream whose seed is a hash of
//! a parent seed and a path of integer tags. Streams never depend on the
//! order in which worker threads pick up work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a sequence of tags.
pub fn derive_seed(parent: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(mix64(parent), |acc, &t| mix64(acc ^ mix64(t)))
}

pub fn stream(parent: u64, tags: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(parent, tags))
}

/// Stream tags used across the crate so that stages never share a stream.
pub mod tag {
    pub const SHOT: u64 = 1;
    pub const READOUT: u64 = 2;
    pub const CALIBRATION: u64 = 3;
    pub const BUDGET: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const IMAGE: u64 = 6;
    pub const WILSON: u64 = 7;
    pub const PILOT: u64 = 8;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let a: u64 = stream(42, &[1, 2]).random();
        let b: u64 = stream(42, &[1, 2]).random();
        let c: u64 = stream(42, &[2, 1]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(derive_seed(1, &[]), derive_seed(2, &[]));
    }
}

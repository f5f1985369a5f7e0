//! Deterministic RNG stream derivation. Every source of randomness in an
//! experiment is a ChaCha8 stream seeded by mixing the run seed with stable
//! integer labels, so any genome evaluation or reproduction step can be
//! replayed in isolation on any platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full-period mixing of a 64-bit label into a seed.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable stream id for (seed, a, b); also recorded in generation logs.
pub fn stream_id(seed: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(seed) ^ a) ^ b)
}

/// RNG stream for a labeled stage of a run.
pub fn stream(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_id(seed, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<u64> = stream(7, 3, 1).random_iter().take(4).collect();
        let b: Vec<u64> = stream(7, 3, 1).random_iter().take(4).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_labels_give_distinct_streams() {
        let mut r1 = stream(7, 3, 1);
        let mut r2 = stream(7, 3, 2);
        let mut r3 = stream(8, 3, 1);
        let x1: u64 = r1.random();
        let x2: u64 = r2.random();
        let x3: u64 = r3.random();
        assert_ne!(x1, x2);
        assert_ne!(x1, x3);
    }

    #[test]
    fn stream_ids_are_stable_across_builds() {
        // Pinned so logged stream ids stay meaningful between versions.
        assert_eq!(stream_id(0, 0, 0), 0x238275bc38fcbe91);
        assert_eq!(stream_id(7, 3, 1), 0x10490351134c1271);
        assert_ne!(stream_id(0, 0, 0), stream_id(0, 0, 1));
    }
}

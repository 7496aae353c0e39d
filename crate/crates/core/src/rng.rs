//! Reproducible random streams.
//!
//! Every experiment takes one root seed. Independent streams are derived by
//! hashing the root with an index path (trial number, coin realization,
//! round, prefix, ...), so results do not depend on evaluation order and
//! parallel runners reproduce sequential ones bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the stream keyed by `path` under `root`.
pub fn derive_stream(root: u64, path: &[u64]) -> StreamRng {
    let mut h = splitmix64(root);
    for (depth, &p) in path.iter().enumerate() {
        h = splitmix64(h ^ splitmix64(p.wrapping_add((depth as u64 + 1).wrapping_mul(GOLDEN))));
    }
    let mut seed = [0u8; 32];
    let mut state = h;
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Derives a child seed, for APIs that take a plain `u64`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(root);
    for &p in path {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = derive_stream(7, &[1, 2]).random();
        let b: u64 = derive_stream(7, &[1, 2]).random();
        let c: u64 = derive_stream(7, &[2, 1]).random();
        let d: u64 = derive_stream(8, &[1, 2]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}

//! Counter-based random streams.
//!
//! Every periodogram bin draws from its own ChaCha8 stream: the key comes from
//! the seed, the 64-bit stream id packs the window and bin index. Nothing is
//! shared between bins, so bins (and whole periodograms) can be generated in
//! any order or in parallel with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for one `(seed, domain, index)` triple. `domain` must
/// fit in 16 bits and `index` in 48 bits.
pub fn keyed_stream(seed: u64, domain: u16, index: u64) -> ChaCha8Rng {
    debug_assert!(index < (1 << 48));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) | (index & ((1 << 48) - 1)));
    rng
}

/// Derive a child seed from a parent seed and a path of indices, e.g.
/// `(master, environment, power, replicate)`.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(parent ^ 0x6A09_E667_F3BC_C908), |acc, &k| {
            mix64(acc ^ mix64(k.wrapping_add(0x9E37_79B9_7F4A_7C15)))
        })
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

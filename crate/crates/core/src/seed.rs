//! Deterministic seed derivation.
//!
//! Every random stream in the workspace is a ChaCha8 generator seeded through
//! [`derive_seed`]. Component streams never share a seed: each one is derived
//! from a master seed, a short component tag, and an index. The scheme is a
//! plain FNV-1a fold of the tag followed by SplitMix64 finalization, so it is
//! stable across platforms and releases.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Good avalanche behavior for cheap integer mixing.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive a child seed from `(master, tag, index)`.
///
/// Changing any of the three inputs changes the result; in particular a new
/// master seed moves every derived stream at once.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let t = fnv1a(tag.as_bytes());
    splitmix64(splitmix64(master ^ t).wrapping_add(splitmix64(index ^ t.rotate_left(32))))
}

/// ChaCha8 stream for a derived seed.
pub fn derive_rng(master: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, index))
}

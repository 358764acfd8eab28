//! Seed derivation. Every node owns an independent ChaCha stream keyed by
//! `(master seed, node id)`, so adding nodes never perturbs existing streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type NodeRng = ChaCha8Rng;

/// Stream for node `node` under master seed `seed`.
pub fn node_rng(seed: u64, node: usize) -> NodeRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64);
    rng
}

/// Generator for tree construction, labelings and other global draws; uses a
/// stream that no node id can reach.
pub fn global_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    rng
}

/// Mixes a trial index into a master seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

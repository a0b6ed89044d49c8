//! Deterministic seed derivation.
//!
//! A child seed is `mix64(mix64(master ^ fnv1a64(label)) + index)` where
//! `mix64` is the SplitMix64 output function applied to `x + 0x9e3779b97f4a7c15`
//! and `fnv1a64` is the 64-bit FNV-1a hash of the label's UTF-8 bytes. The
//! same rule derives per-trial seeds from a master seed (label = experiment
//! name) and sub-streams inside a trial (label = stream name).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn child_seed(master: u64, label: &str, index: u64) -> u64 {
    mix64(mix64(master ^ fnv1a64(label.as_bytes())).wrapping_add(index))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn child_rng(master: u64, label: &str, index: u64) -> Rng {
    rng_from_seed(child_seed(master, label, index))
}

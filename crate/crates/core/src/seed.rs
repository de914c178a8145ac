//! Labeled seed derivation.
//!
//! Every source of randomness in the crate draws from a `ChaCha8` stream whose
//! seed is derived from one master seed plus a label path, e.g.
//! `(master, [TRAIN, innings])` or `(master, [SIM, sim_index])`. Streams are
//! therefore independent of thread scheduling: parallel and sequential runs
//! produce identical output.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Label for value-network training streams.
pub const TRAIN: u64 = 0x01;
/// Label for interruption-point draws.
pub const INTERRUPT: u64 = 0x02;
/// Label for per-simulation streams.
pub const SIM: u64 = 0x03;
/// Label for the cross-validation fold shuffle.
pub const FOLD_SHUFFLE: u64 = 0x04;
/// Label for synthetic corpus generation.
pub const GENERATE: u64 = 0x05;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a label path.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(master ^ 0xD1B5_4A32_D192_ED03);
    for &part in parts {
        state = splitmix64(state ^ splitmix64(part));
    }
    state
}

/// A deterministic rng for the given label path.
pub fn rng(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, parts))
}

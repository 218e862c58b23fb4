//! Deterministic random-stream derivation.
//!
//! Every sampled object in the crate (noise shot, test phase, parameter
//! init) draws from its own ChaCha substream derived from a master seed,
//! a purpose tag and an item index. Results are therefore bit-for-bit
//! reproducible and independent of evaluation order or thread count.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

pub(crate) const TAG_PAIR_INPUT: u64 = 1;
pub(crate) const TAG_PAIR_REFERENCE: u64 = 2;
pub(crate) const TAG_TEST: u64 = 3;
pub(crate) const TAG_TEST_PHASE: u64 = 4;
pub(crate) const TAG_PARAM_INIT: u64 = 5;
pub(crate) const TAG_DATASET: u64 = 6;
pub(crate) const TAG_TRAINING: u64 = 7;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives one u64 from (seed, tag, index); used both for nested seed
/// derivation and directly.
pub(crate) fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    let mut state = seed ^ tag.wrapping_mul(0xA076_1D64_78BD_642F);
    let a = splitmix64(&mut state);
    let mut state2 = a ^ index.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    splitmix64(&mut state2)
}

/// ChaCha substream for item `index` of purpose `tag` under `seed`.
pub(crate) fn substream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    let mut state = derive(seed, tag, index);
    for chunk in bytes.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

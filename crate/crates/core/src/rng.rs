//! Deterministic hierarchical random-number streams.
//!
//! Every stochastic stage of a drop pulls from its own substream, keyed by a
//! purpose tag and up to two indices. Substreams are independent ChaCha
//! streams derived from the drop seed with a splitmix64 chain, so any stage
//! (placement, shadowing, clusters, fading, noise) is reproducible on its own
//! and the overall result does not depend on evaluation order or thread
//! scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. The discriminant enters the seed derivation,
/// so adding variants never perturbs existing streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    ApPlacement = 1,
    MsPlacement = 2,
    LinkState = 3,
    ShadowApField = 4,
    ShadowMsField = 5,
    Clusters = 6,
    Fading = 7,
    PilotNoise = 8,
    PilotAssign = 9,
    SymbolNoise = 10,
    QuantNoise = 11,
    Payload = 12,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a campaign seed with a sweep-point and drop index into a drop seed.
pub fn derive_drop_seed(campaign_seed: u64, sweep_index: u64, drop_index: u64) -> u64 {
    let a = splitmix64(campaign_seed);
    let b = splitmix64(a ^ sweep_index.rotate_left(17));
    splitmix64(b ^ drop_index.rotate_left(41))
}

/// Independent ChaCha stream for `(seed, purpose, i, j)`.
pub fn substream(seed: u64, purpose: Purpose, i: u64, j: u64) -> ChaCha8Rng {
    let mut state = splitmix64(seed);
    state = splitmix64(state ^ purpose as u64);
    state = splitmix64(state ^ i);
    state = splitmix64(state ^ j);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

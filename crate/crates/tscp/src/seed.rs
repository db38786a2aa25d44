//! Hierarchical seed derivation so adding one consumer of randomness never
//! perturbs another's stream.

/// SplitMix64 step.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mix a path of tags (experiment seed, repetition, role, ...) into one seed.
pub fn derive_seed(path: &[u64]) -> u64 {
    let mut state = 0x243f6a8885a308d3u64;
    let mut out = 0u64;
    for &part in path {
        state ^= part;
        out = splitmix64(&mut state);
    }
    out
}

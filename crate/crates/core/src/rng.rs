//! Seeded random streams. Stream `k` of seed `s` is independent of the
//! order in which streams are consumed, so parallel and serial runs agree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 20_231_015;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a seed with a small key, e.g. a grid point, into a new seed.
pub fn derive_seed(seed: u64, key: &[u64]) -> u64 {
    // splitmix64 finalizer over each word
    key.iter().fold(seed, |acc, &k| {
        let mut z = acc ^ k.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

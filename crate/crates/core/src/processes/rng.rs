use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seedable generator used for every random draw in the crate.
pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

/// Derives the seed of child stream `index` from `seed` (splitmix64 over
/// `seed ⊕ index`). Distinct indices give statistically independent streams.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z =
        (seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn split_rng(seed: u64, index: u64) -> SeedRng {
    rng_from_seed(split_seed(seed, index))
}

//! Counter-style seeding: every random stream is a ChaCha8 keystream picked by
//! `(seed, stream)`, so shards can be generated independently and in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Default seed used when neither a flag nor `APTAIL_SEED` provides one.
pub const DEFAULT_SEED: u64 = 0x005e_eda9_7a11;

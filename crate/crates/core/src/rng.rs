//! Seeded random streams. Every replica gets its own ChaCha stream keyed by
//! `(seed, replica)`, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, replica: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(replica);
    r
}

/// Splits `count` items into `replicas` contiguous chunk sizes.
pub fn chunk_sizes(count: usize, replicas: usize) -> Vec<usize> {
    let r = replicas.max(1);
    (0..r).map(|i| count / r + usize::from(i < count % r)).collect()
}

//! Deterministic per-shot random streams.
//!
//! Every shot draws from its own ChaCha stream under the master seed, so
//! results do not depend on how shots are spread across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ShotRng = ChaCha8Rng;

pub fn shot_rng(master_seed: u64, shot_index: u64) -> ShotRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(shot_index);
    rng
}

/// Independent master seed for the `tag`-th point of a campaign (splitmix64).
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    let mut z = master_seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Half-open shot ranges of a fixed size covering `start..end`.
pub(crate) fn chunks(start: u64, end: u64, chunk: u64) -> impl Iterator<Item = (u64, u64)> {
    let chunk = chunk.max(1);
    (start..end).step_by(chunk as usize).map(move |a| (a, (a + chunk).min(end)))
}

/// Builds a rayon pool; `0` means one thread per core.
pub(crate) fn pool(workers: usize) -> crate::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::InvalidParams(format!("thread pool: {e}")))
}

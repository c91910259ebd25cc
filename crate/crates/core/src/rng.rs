//! Seedable, portable randomness with documented stream splitting.
//!
//! Everything random in this crate flows through ChaCha8: the generator is
//! portable across platforms and supports independent streams, so a parent
//! seed plus a stream index fully determines a child generator. Per-task
//! sampling uses one child stream per task, which keeps a task's sample
//! independent of how many tasks precede it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root generator for a seed (stream 0).
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child generator: same seed, independent stream.
pub fn child_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed for a subcomponent (splitmix64 finalizer).
///
/// Used where a component needs its own seed rather than a stream of the
/// parent, e.g. one seed per benchmark repetition.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

//! Counter-based RNG substreams.
//!
//! Every frame of a Monte Carlo run gets its own generator derived from
//! `(seed, frame_index)`, so per-frame results do not depend on how
//! frames are distributed over workers and runs are bit-reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed tag for per-frame message bits, shared by every driver that
/// generates random payloads so identical seeds mean identical frames.
pub const MESSAGE_TAG: u64 = 0x6d65_7373;

/// splitmix64 finalizer; good avalanche for seed mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for one `(seed, stream)` substream.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mixed = splitmix64(seed ^ splitmix64(stream));
    ChaCha8Rng::seed_from_u64(mixed)
}

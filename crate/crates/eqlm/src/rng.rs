//! Seeding scheme for reproducible campaigns.
//!
//! Each run owns one 64-bit seed, and every consumer of randomness inside
//! the run (environment resets, network initialization, exploration and
//! minibatch draws) gets its own ChaCha stream of that seed. Streams never
//! interact, so two agents with different update rules still see the same
//! sequence of initial states at the same run index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream for environment reset noise.
pub const STREAM_ENV: u64 = 0;
/// Stream for network weight initialization.
pub const STREAM_NET: u64 = 1;
/// Stream for action exploration and replay sampling.
pub const STREAM_POLICY: u64 = 2;

/// Independent generator for (`run_seed`, `stream`).
pub fn stream_rng(run_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(stream);
    rng
}

/// The three per-run generators in one call: (env, net, policy).
pub fn run_rngs(run_seed: u64) -> (ChaCha8Rng, ChaCha8Rng, ChaCha8Rng) {
    (
        stream_rng(run_seed, STREAM_ENV),
        stream_rng(run_seed, STREAM_NET),
        stream_rng(run_seed, STREAM_POLICY),
    )
}

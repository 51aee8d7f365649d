//! Seeded randomness.
//!
//! All sampling uses ChaCha8 (`rand_chacha::ChaCha8Rng`). A 64-bit seed
//! selects the key and a [`Stream`] selects one of ChaCha's independent
//! 64-bit stream ids, so the solver and the explainers draw from disjoint
//! sequences even when they share a seed. Independent jobs (coalitions,
//! replicates, sampling chunks) get their own seeds from [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Solver,
    /// Baseline draws of the strategy explainer.
    SsfiBaseline,
    /// Chunk `n` of the strategy explainer's permutation samples.
    SsfiChunk(u64),
    Test,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Solver => 1,
            Stream::SsfiBaseline => 2,
            Stream::Test => 3,
            Stream::SsfiChunk(n) => (1 << 32) + n,
        }
    }
}

pub fn stream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed for the job identified by `path`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

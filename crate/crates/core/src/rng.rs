//! Named random sub-streams derived from one master seed.
//!
//! Every stochastic draw in the crate comes from `substream(master, tag, index)`.
//! Streams with different `(tag, index)` pairs are independent, so adding
//! trajectories or scenarios never perturbs the ones already generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// FNV-1a over the tag bytes followed by the little-endian index.
fn stream_id(tag: &str, index: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    tag.as_bytes()
        .iter()
        .chain(index.to_le_bytes().iter())
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

pub fn substream(master: u64, tag: &str, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(tag, index));
    rng
}

/// Derives a child seed, for APIs that take a plain `u64`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    use rand::RngCore;
    substream(master, tag, index).next_u64()
}

//! Named random sub-streams.
//!
//! Every stream is a ChaCha8 generator (`rand_chacha` 0.9.0, pinned). The
//! key comes from `ChaCha8Rng::seed_from_u64(master_seed ^ fnv1a64(label))`
//! and the ChaCha stream id is the caller's index, so replica `r` of an
//! experiment always reads the same bits no matter which thread runs it.
//! Changing any of this changes every golden output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Label used for Monte Carlo replicas.
pub const REPLICA_STREAM: &str = "replica";

fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Sub-stream `index` of the family `label` under `master_seed`.
pub fn substream(master_seed: u64, label: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ fnv1a64(label));
    rng.set_stream(index);
    rng
}

//! Keyed random streams.
//!
//! Each draw site gets its own generator seeded from
//! `(seed, replicate, round, kind)`, so results do not depend on the order in
//! which replicates run or on how many workers run them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamKind {
    Warmup = 1,
    Policy = 2,
    Reward = 3,
    Data = 4,
    Diagnostic = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replicate: u64,
    pub round: u64,
    pub kind: StreamKind,
}

impl StreamKey {
    pub fn new(seed: u64, replicate: u64, round: u64, kind: StreamKind) -> Self {
        StreamKey {
            seed,
            replicate,
            round,
            kind,
        }
    }

    pub fn rng(&self) -> StreamRng {
        stream(self.seed, self.replicate, self.round, self.kind)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one `(seed, replicate, round, kind)` cell.
pub fn stream(seed: u64, replicate: u64, round: u64, kind: StreamKind) -> StreamRng {
    let mut seed_bytes = [0u8; 32];
    let mut h = splitmix64(seed);
    for (i, word) in [replicate, round, kind as u64, 0x4556_494C_4C00_0000]
        .into_iter()
        .enumerate()
    {
        h = splitmix64(h ^ word);
        seed_bytes[i * 8..(i + 1) * 8].copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed_bytes)
}

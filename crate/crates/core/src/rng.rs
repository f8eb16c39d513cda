//! Reproducible random streams.
//!
//! A [`SeededStream`] names an independent ChaCha8 key derived from
//! `(seed, stream_index)`. Monte Carlo estimators give draw `i` its own
//! generator on ChaCha stream `i` under that key, so a draw's randomness
//! depends only on the seed, the stream index and `i`, never on how draws
//! are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_index: 0 }
    }

    pub fn with_index(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// An independent stream for sub-task `k` of this one.
    pub fn child(&self, k: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_index.wrapping_add(GOLDEN))),
            stream_index: k,
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        let mixed = splitmix64(self.stream_index ^ 0x5851_f42d_4c95_7f2d);
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let word = splitmix64(self.seed.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)) ^ mixed);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        key
    }

    /// Generator for draw `draw` of a Monte Carlo run.
    pub fn draw_rng(&self, draw: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(draw);
        rng
    }

    /// Generator for sequential use of the whole stream.
    pub fn rng(&self) -> ChaCha8Rng {
        self.draw_rng(u64::MAX)
    }
}

//! Reproducible random streams.
//!
//! A [`SeedStream`] names one ChaCha8 stream: the root seed fixes the key and
//! the stream id selects an independent 64-bit stream under that key, so any
//! replicate or sub-task can be regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    pub root: u64,
    pub stream: u64,
}

impl SeedStream {
    pub fn new(root: u64, stream: u64) -> Self {
        SeedStream { root, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(self.stream);
        rng
    }

    /// A child stream whose id is a hash of this stream id and `label`.
    pub fn derive(&self, label: u64) -> SeedStream {
        SeedStream {
            root: self.root,
            stream: splitmix64(self.stream ^ splitmix64(label.wrapping_add(0x632b_e59b_d9b4_e019))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

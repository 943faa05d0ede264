//! Splittable seeding.
//!
//! One 64-bit seed drives every random component. Each component gets its
//! own ChaCha8 stream: the key comes from the seed, the stream id from the
//! first eight bytes of `sha256(component name)`. Streams are independent
//! of each other, so adding a component never shifts the numbers another
//! one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeder {
    seed: u64,
}

impl Seeder {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(component: &str) -> u64 {
        let digest = Sha256::digest(component.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
    }

    /// Generator for `component`, positioned at the start of its stream.
    pub fn rng(&self, component: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(Self::stream_id(component));
        rng
    }
}

//! Deterministic random substreams.
//!
//! Every random draw in the crate is addressed by a `(replica, level, purpose)`
//! path under a master seed. The master seed fixes the ChaCha key and the path
//! is packed injectively into the 64-bit ChaCha stream id, so distinct paths
//! read disjoint keystreams and a given path always replays the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. Field layers and stable atoms always use
/// different purposes, which keeps the Poisson measure independent of the field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Purpose {
    Layer = 1,
    Field = 2,
    StableAtoms = 3,
    Subordination = 4,
    Omega = 5,
    Bootstrap = 6,
    Synthetic = 7,
}

impl Purpose {
    pub fn name(self) -> &'static str {
        match self {
            Purpose::Layer => "layer",
            Purpose::Field => "field",
            Purpose::StableAtoms => "stable-atoms",
            Purpose::Subordination => "subordination",
            Purpose::Omega => "omega",
            Purpose::Bootstrap => "bootstrap",
            Purpose::Synthetic => "synthetic",
        }
    }
}

const REPLICA_BITS: u32 = 40;
const LEVEL_BITS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub replica: u64,
    pub level: u32,
    pub purpose: Purpose,
}

impl RngStream {
    pub fn new(master_seed: u64, replica: u64, level: u32, purpose: Purpose) -> Self {
        assert!(replica < (1 << REPLICA_BITS), "replica index out of range");
        assert!(level < (1 << LEVEL_BITS), "level index out of range");
        Self { master_seed, replica, level, purpose }
    }

    pub fn with_replica(self, replica: u64) -> Self {
        Self::new(self.master_seed, replica, self.level, self.purpose)
    }

    pub fn with_level(self, level: u32) -> Self {
        Self::new(self.master_seed, self.replica, level, self.purpose)
    }

    pub fn with_purpose(self, purpose: Purpose) -> Self {
        Self::new(self.master_seed, self.replica, self.level, purpose)
    }

    pub fn stream_id(&self) -> u64 {
        (self.replica << (LEVEL_BITS + 8)) | ((self.level as u64) << 8) | self.purpose as u64
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.master_seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id());
        rng
    }

    /// Text form used in manifests: `seed/replica/level/purpose`.
    pub fn path(&self) -> String {
        format!("{}/{}/{}/{}", self.master_seed, self.replica, self.level, self.purpose.name())
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

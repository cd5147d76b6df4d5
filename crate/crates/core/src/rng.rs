//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the 64-bit base seed with
//! the 64-bit ChaCha stream word set to a stream id. Stream ids pack the
//! replication index in the high bits and a role in the low 16 bits, so
//! adding replications or users never perturbs existing streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

/// Primary-network traffic (channel free/busy draws).
pub const ROLE_TRAFFIC: u16 = 0;
/// CSMA backoff draws.
pub const ROLE_CONTENTION: u16 = 1;
/// Per-block draw of theta from a prior.
pub const ROLE_THETA: u16 = 2;
/// First user stream; user `k` uses `ROLE_USER_BASE + k`.
pub const ROLE_USER_BASE: u16 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream for `role` within replication `replication`.
    pub fn derive(seed: u64, replication: u64, role: u16) -> Self {
        Self {
            seed,
            stream: (replication << 16) | role as u64,
        }
    }

    pub fn for_user(seed: u64, replication: u64, user: usize) -> Self {
        let role = ROLE_USER_BASE as usize + user;
        assert!(role <= u16::MAX as usize, "too many users for stream layout");
        Self::derive(seed, replication, role as u16)
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

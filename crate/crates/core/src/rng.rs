//! Counter-based, splittable random streams.
//!
//! A [`StreamFactory`] maps `(purpose, replication index)` to an independent
//! ChaCha8 keystream. The key is derived from the master seed and the purpose
//! tag; the replication index selects the ChaCha stream id. Draws in one
//! replication therefore never depend on how replications are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Generator handed to every sampler.
pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamFactory {
    seed: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for replication `index` of the task named `purpose`.
    pub fn stream(&self, purpose: &str, index: u64) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.seed ^ fnv1a(purpose)));
        rng.set_stream(index);
        rng
    }

    /// A factory whose streams are disjoint from this one's; used when a
    /// composite experiment runs several sub-studies under one seed.
    pub fn derive(&self, label: &str) -> Self {
        Self::new(splitmix(self.seed.wrapping_add(fnv1a(label))))
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `task` for every replication index on the current rayon pool and
/// returns the results ordered by index, independent of completion order.
pub fn replicate<T, F>(reps: usize, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..reps as u64).into_par_iter().map(task).collect()
}

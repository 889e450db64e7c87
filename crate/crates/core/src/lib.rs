//! Simulation and bounds for many-server queues with heavy-tailed
//! inter-arrival or service times, under `λ = n − B n^{1/α}`.

pub mod bounds;
pub mod compare;
pub mod dist;
pub mod error;
pub mod quad;
pub mod queuesim;
pub mod renewal;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

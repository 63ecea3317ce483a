// SPDX-License-Identifier: Apache-2.0

//! Counter-derived random streams.
//!
//! Every stochastic component draws from `stream(master, component, index)`,
//! so results depend only on the master seed and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Component tags; one per independent consumer of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Component {
    LinkIds = 1,
    Topology = 2,
    Keys = 3,
    Flows = 4,
    BruteForce = 5,
    Correlation = 6,
    Replay = 7,
}

/// Independent generator for the `index`-th unit of work of `component`.
pub fn stream(master: u64, component: Component, index: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&(component as u64).to_le_bytes());
    seed[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

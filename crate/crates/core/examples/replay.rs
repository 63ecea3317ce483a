// SPDX-License-Identifier: Apache-2.0

//! Capture a valid header and resend it before and after a key rotation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secure_lipsin::attachment::MasterKeys;
use secure_lipsin::attack::{run_replay, AdversaryConfig};
use secure_lipsin::bloom::FilterParams;
use secure_lipsin::sim::{NodeId, Scheme, Topology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topo = Topology::chain(FilterParams::new(256, 5, 1.0)?, 5, 3);
    let keys = MasterKeys::random(&mut ChaCha8Rng::seed_from_u64(5));
    for scheme in [Scheme::EfidSecured, Scheme::LipsinPlain] {
        for rotations in [0, 1, 4] {
            let cfg = AdversaryConfig::replay(scheme, NodeId(0), NodeId(4), 1_000, rotations);
            let r = run_replay(&topo, &cfg, &keys)?;
            println!(
                "{:6} after {rotations} rotations: {} / {} replays delivered",
                scheme.name(),
                r.successes,
                r.trials
            );
        }
    }
    Ok(())
}

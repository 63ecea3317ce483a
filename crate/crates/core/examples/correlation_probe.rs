// SPDX-License-Identifier: Apache-2.0

//! Look for bit structure in identifiers that share all but one link.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secure_lipsin::attachment::MasterKeys;
use secure_lipsin::attack::{run_correlation_probe, THRESHOLD_Z};
use secure_lipsin::bloom::FilterParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let keys = MasterKeys::random(&mut ChaCha8Rng::seed_from_u64(6));
    let params = FilterParams::new(256, 5, 1.0)?;
    let r = run_correlation_probe(&keys, &params, 23, 10_000, 6)?;
    for (name, s) in [("raw", &r.raw), ("encrypted", &r.encrypted)] {
        println!(
            "{name:9} max bit bias z {:8.2}  pair correlation z {:8.2}  over {THRESHOLD_Z} sigma: {}",
            s.max_bit_bias_z,
            s.pair_correlation_z,
            s.correlation_detected(THRESHOLD_Z)
        );
    }
    Ok(())
}

// SPDX-License-Identifier: Apache-2.0

//! Guess identifiers from an attached node and compare the hit rate with
//! the closed form, for plain LIPSIN and for a 16-bit test tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secure_lipsin::attachment::{MasterKeys, TagWidth};
use secure_lipsin::attack::{run_brute_force, AdversaryConfig, GuessStrategy};
use secure_lipsin::bloom::{expected_fill, FilterParams};
use secure_lipsin::sim::{NodeId, Scheme, Topology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let keys =
        MasterKeys::random(&mut ChaCha8Rng::seed_from_u64(4)).with_tag_width(TagWidth::new(16)?);
    for (scheme, m) in [(Scheme::LipsinPlain, 320), (Scheme::EfidSecured, 256)] {
        for l in 1..=2 {
            let topo = Topology::chain(FilterParams::new(m, 5, 1.0)?, 4, l);
            let mut cfg =
                AdversaryConfig::brute_force(scheme, NodeId(0), NodeId(l + 1), 2_000_000, 4);
            cfg.guess = GuessStrategy::Conditioned(expected_fill(m, 5, 23));
            let r = run_brute_force(&topo, &cfg, &keys)?;
            println!(
                "{:6} l={l}: {} / {} reached target, rate {:.3e}, analytic {:.3e}",
                scheme.name(),
                r.successes,
                r.trials,
                r.empirical_rate,
                r.p_a
            );
        }
    }
    Ok(())
}

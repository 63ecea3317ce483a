// SPDX-License-Identifier: Apache-2.0

//! Build a forwarding identifier from link identifiers and test membership.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secure_lipsin::bloom::{
    build_fid, false_positive_prob, membership_check, FilterParams, LinkId,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = FilterParams::new(256, 5, 0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let path: Vec<LinkId> = (0..4).map(|_| LinkId::random(&params, &mut rng)).collect();
    let fid = build_fid(&path, &params)?;
    println!("fid  {}", fid.to_hex());
    println!("fill {:.4}", fid.fill_factor());
    for (i, lid) in path.iter().enumerate() {
        println!("on-path link {i}: {}", membership_check(&fid, lid));
    }

    let strangers = 100_000;
    let hits = (0..strangers)
        .filter(|_| membership_check(&fid, &LinkId::random(&params, &mut rng)))
        .count();
    println!(
        "off-path links passing: {hits}/{strangers}, rho^k = {:.3e}",
        false_positive_prob(fid.fill_factor(), 5, 1)?
    );
    Ok(())
}

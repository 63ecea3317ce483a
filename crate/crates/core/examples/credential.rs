// SPDX-License-Identifier: Apache-2.0

//! Issue a credential, verify it, tamper with it, rotate the tag key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secure_lipsin::attachment::{issue_credential, rotate_key, security_check, MasterKeys};
use secure_lipsin::bloom::ForwardingId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let keys = MasterKeys::random(&mut rng);
    let fid = ForwardingId::random_with_fill(256, 0.35, &mut rng);

    let cred = issue_credential(&fid, &keys)?;
    println!("wire bytes  {}", hex::encode(cred.to_bytes()));
    println!(
        "genuine     {:?}",
        security_check(&cred, &keys, 256).is_accept()
    );
    println!(
        "one flip    {:?}",
        security_check(&cred.with_bit_flipped(17), &keys, 256)
    );

    let next = rotate_key(&keys);
    println!("next epoch  {:?}", security_check(&cred, &next, 256));
    let fresh = issue_credential(&fid, &next)?;
    println!(
        "reissued    {:?}",
        security_check(&fresh, &next, 256).is_accept()
    );
    Ok(())
}

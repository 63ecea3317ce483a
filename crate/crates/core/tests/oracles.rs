// SPDX-License-Identifier: Apache-2.0

// Statistical checks of library behaviour against independently computed
// expectations.

mod common;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use secure_lipsin::attachment::{
    issue_credential, rotate_key, security_check, CheckOutcome, MasterKeys, RejectReason, TagWidth,
};
use secure_lipsin::attack::{run_brute_force, AdversaryConfig, GuessStrategy};
use secure_lipsin::bloom::{build_fid, expected_fill, FilterParams, ForwardingId, LinkId};
use secure_lipsin::sim::{
    fw_forward, load_topology, FlowOptions, NapPolicy, NodeId, Packet, Role, Scheme, Simulator,
    Topology, TopologyBuilder,
};

use common::{choose, fill_by_counting, rate_sigma, z_score};

#[test]
fn link_id_bits_are_uniform() {
    let params = FilterParams::new(320, 5, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 100_000u64;
    let mut counts = vec![0u64; 320];
    for _ in 0..draws {
        for i in LinkId::random(&params, &mut rng).positions() {
            counts[i] += 1;
        }
    }
    let p = 5.0 / 320.0;
    let worst = counts
        .iter()
        .map(|&c| z_score(c, draws, p))
        .fold(0.0, f64::max);
    // 320 simultaneous tests; 4.5 sigma keeps the family-wise false alarm near 0.2%
    assert!(worst < 4.5, "max z {worst}");
}

#[test]
fn mean_fill_matches_counting_oracle() {
    for m in [256usize, 320] {
        let params = FilterParams::new(m, 5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
        let n = 5_000;
        let fills: Vec<f64> = (0..n)
            .map(|_| {
                let v: Vec<LinkId> = (0..23).map(|_| LinkId::random(&params, &mut rng)).collect();
                build_fid(&v, &params).unwrap().fill_factor()
            })
            .collect();
        let mean = fills.iter().sum::<f64>() / n as f64;
        let var = fills.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let oracle = fill_by_counting(m, 5, 23);
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - oracle).abs() < 4.0 * se,
            "m={m} mean={mean} oracle={oracle}"
        );
        // the closed form used for default fills is the usual approximation
        assert!((expected_fill(m, 5, 23) - oracle).abs() < 0.01 * oracle);
    }
}

#[test]
fn long_paths_fit_the_fill_cap() {
    let params = FilterParams::new(256, 5, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ok = (0..10_000)
        .filter(|_| {
            let v: Vec<LinkId> = (0..23).map(|_| LinkId::random(&params, &mut rng)).collect();
            build_fid(&v, &params).is_ok()
        })
        .count();
    assert!(ok >= 9_900, "{ok}/10000");
}

#[test]
fn forwarding_false_positives_follow_hypergeometric_law() {
    let params = FilterParams::new(256, 5, 1.0).unwrap();
    let spokes = 60u32;
    let mut b = TopologyBuilder::new(params, 4);
    b.node(NodeId(0), Role::Nap);
    for i in 1..=spokes {
        b.node(NodeId(i), Role::Fw).link(NodeId(0), NodeId(i));
    }
    let topo = b.build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let total_c5 = choose(256, 5);
    let (mut observed, mut expected, mut variance) = (0u64, 0.0, 0.0);
    for _ in 0..2_000 {
        let v: Vec<LinkId> = (0..23).map(|_| LinkId::random(&params, &mut rng)).collect();
        let fid = build_fid(&v, &params).unwrap();
        let p = choose(fid.count_ones() as u64, 5) / total_c5;
        expected += p * f64::from(spokes);
        variance += p * (1.0 - p) * f64::from(spokes);
        observed +=
            fw_forward(&Packet::with_fid(fid, Vec::new()), &topo, NodeId(0), None).len() as u64;
    }
    let z = (observed as f64 - expected).abs() / variance.sqrt();
    assert!(
        z < 3.0,
        "observed {observed} expected {expected:.1} z {z:.2}"
    );
}

#[test]
fn keys_from_other_epochs_never_verify() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut epochs = vec![MasterKeys::random(&mut rng)];
    for _ in 0..4 {
        epochs.push(rotate_key(epochs.last().unwrap()));
    }
    let params = FilterParams::new(256, 5, 1.0).unwrap();
    for _ in 0..50 {
        let v: Vec<LinkId> = (0..10).map(|_| LinkId::random(&params, &mut rng)).collect();
        let fid = build_fid(&v, &params).unwrap();
        for (i, issuer) in epochs.iter().enumerate() {
            let cred = issue_credential(&fid, issuer).unwrap();
            for (j, verifier) in epochs.iter().enumerate() {
                let out = security_check(&cred, verifier, 256);
                assert_eq!(out.is_accept(), i == j, "issued {i} checked {j}");
                if i == j {
                    assert_eq!(out, CheckOutcome::Accept(fid.clone()));
                }
            }
            // relabelling an old credential as current does not help
            let mut relabelled = cred.clone();
            relabelled.epoch_hint = epochs[4].epoch();
            if i != 4 {
                assert_eq!(
                    security_check(&relabelled, &epochs[4], 256),
                    CheckOutcome::Reject(RejectReason::BadTag)
                );
            }
        }
    }
}

#[test]
fn plain_brute_force_matches_analytic_rate() {
    let params = FilterParams::new(320, 5, 1.0).unwrap();
    let topo = Topology::chain(params, 11, 1);
    let keys = MasterKeys::random(&mut ChaCha8Rng::seed_from_u64(11));
    let rho = expected_fill(320, 5, 23);
    let mut cfg =
        AdversaryConfig::brute_force(Scheme::LipsinPlain, NodeId(0), NodeId(2), 1_000_000, 11);
    cfg.guess = GuessStrategy::Conditioned(rho);
    let r = run_brute_force(&topo, &cfg, &keys).unwrap();
    // independent of the report's own p_a: five bits, each set with probability rho
    let p = rho.powi(5);
    assert!((r.p_a - p).abs() < 1e-15);
    assert!(z_score(r.successes, r.trials, p) <= 3.0, "{r:?}");
}

#[test]
fn reduced_tag_forgery_matches_composed_rate() {
    let params = FilterParams::new(256, 5, 1.0).unwrap();
    let topo = Topology::chain(params, 12, 1);
    let keys = MasterKeys::random(&mut ChaCha8Rng::seed_from_u64(12))
        .with_tag_width(TagWidth::new(16).unwrap());
    let cfg =
        AdversaryConfig::brute_force(Scheme::EfidSecured, NodeId(0), NodeId(2), 10_000_000, 12);
    let r = run_brute_force(&topo, &cfg, &keys).unwrap();
    let p_sc = 2f64.powi(-16);
    // a forged ciphertext decrypts to a uniform identifier: each bit set with 1/2
    let p_a = p_sc * 0.5f64.powi(5);
    assert!(z_score(r.security_passes, r.trials, p_sc) <= 3.0, "{r:?}");
    assert!(
        (r.empirical_rate - p_a).abs() <= 3.0 * rate_sigma(p_a, r.trials),
        "{r:?} expected {p_a:e}"
    );
}

#[test]
fn multicast_reaches_every_subscriber() {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/topologies/mesh.toml"
    ))
    .unwrap();
    let topo = load_topology(&text).unwrap();
    let keys = MasterKeys::random(&mut ChaCha8Rng::seed_from_u64(13));
    let mut sim = Simulator::new(&topo, keys, NapPolicy::secured());
    let subs = [NodeId(22), NodeId(23)];
    let r = sim
        .run_multicast(NodeId(20), &subs, FlowOptions::default())
        .unwrap();
    assert!(r.delivered());
    assert_eq!(r.intended, BTreeSet::from(subs));
    assert_eq!(sim.counters().security_checks, 1);
}

#[test]
fn random_fill_is_iid_at_rate_rho() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for rho in [0.1, 0.3, 0.5, 0.8] {
        let n = 2_000u64;
        let ones: u64 = (0..n)
            .map(|_| ForwardingId::random_with_fill(256, rho, &mut rng).count_ones() as u64)
            .sum();
        assert!(z_score(ones, n * 256, rho) <= 4.0, "rho {rho}");
    }
}

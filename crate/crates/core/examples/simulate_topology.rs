// SPDX-License-Identifier: Apache-2.0

//! Load a topology document and run its flows through the simulator.
//!
//! `cargo run --example simulate_topology -- path/to/topology.toml`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secure_lipsin::attachment::MasterKeys;
use secure_lipsin::sim::{load_topology, write_delivery_csv, FlowOptions, NapPolicy, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/examples/topologies/chain.toml"
        )
        .to_string()
    });
    let topo = load_topology(&std::fs::read_to_string(&path)?)?;
    println!(
        "{} nodes, {} links, ttl {}",
        topo.node_count(),
        topo.edges().len() / 2,
        topo.ttl()
    );

    let keys = MasterKeys::random(&mut ChaCha8Rng::seed_from_u64(3));
    let mut sim = Simulator::new(&topo, keys, NapPolicy::secured());
    let mut reports = Vec::new();
    for &(p, s) in topo.flows() {
        reports.push(sim.run_flow(p, s, FlowOptions::default())?);
        let tampered = FlowOptions {
            tamper: true,
            ..Default::default()
        };
        reports.push(sim.run_flow(p, s, tampered)?);
    }
    write_delivery_csv(&reports, std::io::stdout())?;
    println!("{:?}", sim.counters());
    Ok(())
}

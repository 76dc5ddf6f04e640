//! Generate a small topological event data set and write it to disk.
//!
//! Usage: `cargo run --example simulate_events [out_dir]`

use std::path::PathBuf;

use tnpar::graph::{write_graph_json, write_topology_csv};
use tnpar::ingest::{discretize, write_events_csv};
use tnpar::sim::{simulate, SimConfig};

fn main() -> tnpar::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("tnpar-sim"));
    std::fs::create_dir_all(&out).map_err(|e| tnpar::Error::Io { path: out.clone(), source: e })?;

    let config = SimConfig {
        node_count: 10,
        type_count: 5,
        mu_range: [0.004, 0.006],
        alpha_range: [0.4, 0.6],
        horizon: 4000.0,
        max_events: None,
        causal_edge_density: 0.3,
        seed: 1,
        ..SimConfig::default()
    };
    let data = simulate(&config)?;

    println!("topology: {} nodes, {} edges", data.topology.node_count(), data.topology.edge_count());
    println!("causal DAG: {:?}", data.dag.edges().collect::<Vec<_>>());
    let mut per_type = vec![0usize; config.type_count];
    for e in &data.events {
        per_type[e.event_type] += 1;
    }
    println!("{} events, per type {:?}", data.events.len(), per_type);

    let counts = discretize(&data.events, config.type_count, config.node_count, config.delta, config.horizon)?;
    println!("{} bins of width {}; {} events binned", counts.bin_count(), counts.delta(), counts.total());

    write_events_csv(&out.join("events.csv"), &data.events)?;
    write_topology_csv(&out.join("topology.csv"), &data.topology)?;
    write_graph_json(&out.join("truth_graph.json"), &data.dag, None)?;
    println!("written to {}", out.display());
    Ok(())
}

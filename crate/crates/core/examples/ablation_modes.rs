//! Train every ablation mode on the same simulated data and print F1 per
//! mode. Merged mode collapses all nodes into one sequence.
//!
//! Usage: `cargo run --release --example ablation_modes [seed]`

use tnpar::experiment::ExperimentConfig;
use tnpar::graph::{extract_graph, geodesic_masks};
use tnpar::ingest::discretize;
use tnpar::metrics::evaluate;
use tnpar::sim::simulate;
use tnpar::train::{apply_mode, train, Mode, TrainConfig};

fn main() -> tnpar::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse().expect("seed must be an integer")).unwrap_or(0);
    let mut config = ExperimentConfig::desk();
    config.set_seed(seed);
    let sim = &config.simulation;

    let data = simulate(sim)?;
    let tensor = discretize(&data.events, sim.type_count, sim.node_count, sim.delta, sim.horizon)?;
    let masks = geodesic_masks(&data.topology, config.training.k_max);
    println!("{} events, true edges {:?}", data.events.len(), data.dag.edges().collect::<Vec<_>>());

    for mode in [Mode::Full, Mode::NoTopology, Mode::Merged, Mode::NoConstraints] {
        let (training, mode_data) = apply_mode(&TrainConfig { mode, ..config.training.clone() }, &masks, &tensor)?;
        let outcome = train(&mode_data, &training)?;
        let (graph, _) = extract_graph(&outcome.posterior, config.threshold)?;
        let r = evaluate(&graph, &data.dag, Some(&outcome.posterior))?;
        println!("{:>15}: f1 {:.3} shd {:>2} sid {:>2} edges {:?}", mode.to_string(), r.f1, r.shd, r.sid, graph.edges().collect::<Vec<_>>());
    }
    Ok(())
}

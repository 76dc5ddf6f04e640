//! Simulate the desk scenario, train the full model and compare the
//! extracted graph with the ground truth. Takes about a minute in release.
//!
//! Usage: `cargo run --release --example train_recover_structure [seed] [out_dir]`

use std::path::PathBuf;

use tnpar::experiment::{run_pipeline, ExperimentConfig};
use tnpar::graph::read_graph_json;

fn main() -> tnpar::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed must be an integer")).unwrap_or(0);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("tnpar-recover"));

    let mut config = ExperimentConfig::desk();
    config.set_seed(seed);
    let report = run_pipeline(&config, &out)?;

    let truth = read_graph_json(&out.join("data/truth_graph.json"))?;
    let found = read_graph_json(&out.join("train/graph.json"))?;
    println!("true edges:      {:?}", truth.edges);
    println!("recovered edges: {:?}", found.edges);
    println!(
        "precision {:.3} recall {:.3} f1 {:.3} shd {} sid {}",
        report.precision, report.recall, report.f1, report.shd, report.sid
    );
    println!("artifacts in {}", out.display());
    Ok(())
}

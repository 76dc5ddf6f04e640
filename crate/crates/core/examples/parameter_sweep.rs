//! Sweep the excitation strength on a shrunken desk scenario and write
//! sweep.csv plus one SVG plot per metric.
//!
//! Usage: `cargo run --release --example parameter_sweep [out_dir]`

use std::path::PathBuf;

use tnpar::experiment::{cmd_sweep, ExperimentConfig, SweepParameter, SweepSpec, SWEEP_METRICS};

fn main() -> tnpar::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("tnpar-sweep"));

    let mut config = ExperimentConfig::desk();
    config.simulation.horizon = 2000.0;
    config.simulation.mu_range = [0.0056, 0.0084];
    config.training.epochs = 20;
    config.seeds = vec![0, 1];
    config.sweep = Some(SweepSpec { parameter: SweepParameter::Alpha, values: vec![0.2, 0.4, 0.6] });

    for a in cmd_sweep(&config, &out)? {
        let cells: Vec<String> = SWEEP_METRICS
            .iter()
            .zip(a.mean.iter().zip(&a.stddev))
            .map(|(m, (mu, sd))| format!("{m} {mu:.2}+/-{sd:.2}"))
            .collect();
        println!("alpha {:.1}: {}", a.value.unwrap_or(f64::NAN), cells.join("  "));
    }
    println!("sweep.csv and plots in {}", out.display());
    Ok(())
}

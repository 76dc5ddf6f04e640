use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tnpar::experiment::{cmd_eval, cmd_simulate, cmd_sweep, cmd_train, ExperimentConfig, Overrides, SWEEP_METRICS};
use tnpar::train::Mode;

#[derive(Parser)]
#[command(name = "tnpar", version, about = "Granger causal discovery on topological event sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate events, topology and ground-truth graph
    Simulate(Common),
    /// Fit the model and write the posterior graph
    Train(Common),
    /// Score a predicted graph against the truth
    Eval(Common),
    /// Simulate, train and evaluate over a parameter grid and seeds
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// full, no_topology, merged or no_constraints
    #[arg(long)]
    mode: Option<Mode>,
    /// Edge threshold on the mean posterior, in (0, 1)
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    topology: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    prediction: Option<PathBuf>,
}

fn run(cli: Cli) -> tnpar::Result<()> {
    let (Command::Simulate(c) | Command::Train(c) | Command::Eval(c) | Command::Sweep(c)) = &cli.command;
    let overrides = Overrides {
        seed: c.seed,
        mode: c.mode,
        threshold: c.threshold,
        epochs: c.epochs,
        events: c.events.clone(),
        topology: c.topology.clone(),
        truth: c.truth.clone(),
        prediction: c.prediction.clone(),
    };
    let config = ExperimentConfig::resolve(c.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Simulate(_) => {
            let s = cmd_simulate(&config, &c.out)?;
            println!(
                "{} events, {} topology edges, {} causal edges -> {}",
                s.events,
                s.topology_edges,
                s.truth_edges,
                c.out.display()
            );
        }
        Command::Train(_) => {
            let s = cmd_train(&config, &c.out)?;
            println!("{} epochs, {} edges at threshold {} -> {}", s.epochs, s.edges, config.threshold, c.out.display());
        }
        Command::Eval(_) => {
            let r = cmd_eval(&config, &c.out)?;
            println!(
                "precision {:.4} recall {:.4} f1 {:.4} shd {} sid {}{}",
                r.precision,
                r.recall,
                r.f1,
                r.shd,
                r.sid,
                if r.dag_repair_applied { " (cycles repaired)" } else { "" }
            );
        }
        Command::Sweep(_) => {
            for a in cmd_sweep(&config, &c.out)? {
                let cells: Vec<String> = SWEEP_METRICS
                    .iter()
                    .zip(a.mean.iter().zip(&a.stddev))
                    .map(|(m, (mu, sd))| format!("{m} {mu:.3}+/-{sd:.3}"))
                    .collect();
                let value = a.value.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
                println!("{value}: {} runs, {}", a.runs, cells.join(", "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

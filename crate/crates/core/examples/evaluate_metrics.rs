//! Precision / recall / F1, SHD and SID on hand-made graphs, plus the cycle
//! repair used before SID when a prediction is not a DAG.

use tnpar::graph::{CausalGraph, CausalTensor};
use tnpar::metrics::{dag_repair, evaluate, shd, sid};

fn main() -> tnpar::Result<()> {
    let truth = CausalGraph::new(4, [(0, 1), (1, 2), (0, 3)])?;

    let cases = [
        ("exact", CausalGraph::new(4, [(0, 1), (1, 2), (0, 3)])?),
        ("one reversed", CausalGraph::new(4, [(1, 0), (1, 2), (0, 3)])?),
        ("one missing", CausalGraph::new(4, [(0, 1), (1, 2)])?),
        ("empty", CausalGraph::empty(4)),
    ];
    for (name, pred) in &cases {
        let r = evaluate(pred, &truth, None)?;
        println!(
            "{name:>12}: precision {:.2} recall {:.2} f1 {:.2} shd {} sid {}",
            r.precision, r.recall, r.f1, r.shd, r.sid
        );
    }

    let two = CausalGraph::new(2, [(0, 1)])?;
    let reversed = CausalGraph::new(2, [(1, 0)])?;
    println!("2-node reversal: shd {} sid {}", shd(&reversed, &two)?, sid(&reversed, &two)?);

    // a cyclic prediction: the weakest edge on the cycle goes
    let cyclic = CausalGraph::new(3, [(0, 1), (1, 2), (2, 0)])?;
    let mut posterior = CausalTensor::zeros(0, 3);
    posterior.set(0, 0, 1, 0.9);
    posterior.set(0, 1, 2, 0.8);
    posterior.set(0, 2, 0, 0.55);
    let repaired = dag_repair(&cyclic, &posterior)?;
    println!("repaired edges: {:?}", repaired.edges().collect::<Vec<_>>());
    let truth3 = CausalGraph::new(3, [(0, 1), (1, 2)])?;
    let r = evaluate(&cyclic, &truth3, Some(&posterior))?;
    println!("cyclic prediction: sid {} (repair applied: {})", r.sid, r.dag_repair_applied);
    Ok(())
}

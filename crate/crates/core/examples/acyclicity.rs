//! The smooth acyclicity score and its gradient.
//!
//! Zero exactly on DAGs, positive on anything with a cycle, and
//! differentiable, so it can be added to a loss over soft adjacency matrices.

use tnpar::graph::{acyclicity_h, acyclicity_h_with_grad, aggregate_g, CausalTensor, SquareMatrix};

fn main() -> tnpar::Result<()> {
    let chain = SquareMatrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]])?;
    let triangle = SquareMatrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]])?;
    println!("h(chain)    = {}", acyclicity_h(&chain));
    println!("h(triangle) = {:.6}", acyclicity_h(&triangle));

    // soft cycle: the score shrinks smoothly as one edge fades out
    for w in [1.0, 0.5, 0.1, 0.0] {
        let mut g = triangle.clone();
        g.set(2, 0, w);
        let (h, grad) = acyclicity_h_with_grad(&g);
        println!("closing edge weight {w:.1}: h = {h:.6}, dh/dg[2][0] = {:.6}", grad.get(2, 0));
    }

    // G sums the per-distance slices and ignores self-excitation
    let mut a = CausalTensor::zeros(1, 2);
    a.set(0, 0, 1, 0.7);
    a.set(1, 1, 0, 0.4);
    a.set(1, 0, 0, 0.9);
    let g = aggregate_g(&a);
    println!("G = [[{}, {}], [{}, {}]], h = {:.6}", g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1), acyclicity_h(&g));
    Ok(())
}

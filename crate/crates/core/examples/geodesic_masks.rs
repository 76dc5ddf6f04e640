//! Distance masks on a small ring-with-tail topology.
//!
//! Each node's neighbours are split by hop count; slice k of the masks is the
//! "exactly k hops away" relation the model filters history through.

use tnpar::graph::{geodesic_masks, TopologyNetwork};

fn main() -> tnpar::Result<()> {
    // 0-1-2-3-0 ring with a tail 3-4-5
    let topology = TopologyNetwork::new(6, [(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5)])?;
    let masks = geodesic_masks(&topology, 2);

    for k in 0..=masks.k_max() {
        println!("B_{k}:");
        for row in masks.slice(k) {
            let cells: Vec<String> = row.iter().map(u8::to_string).collect();
            println!("  {}", cells.join(" "));
        }
    }
    for node in 0..topology.node_count() {
        let rings: Vec<String> = (0..=masks.k_max()).map(|k| format!("{:?}", masks.ring(node, k))).collect();
        println!("node {node}: by distance {}", rings.join(" "));
    }
    // node 5 is three hops from node 0, beyond k_max
    assert_eq!(masks.distance(0, 5), None);
    Ok(())
}

//! Scoring a predicted causal graph against the ground truth.
//!
//! Self-loops are ignored everywhere. SID needs a DAG, so cyclic predictions
//! are first repaired by dropping their weakest cycle edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, CausalTensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub shd: usize,
    pub sid: usize,
    pub dag_repair_applied: bool,
}

fn same_size(pred: &CausalGraph, truth: &CausalGraph) -> Result<()> {
    if pred.type_count() != truth.type_count() {
        return Err(Error::shape(format!(
            "predicted graph has {} types, truth has {}",
            pred.type_count(),
            truth.type_count()
        )));
    }
    Ok(())
}

/// Precision, recall and F1 over directed edges.
///
/// An empty prediction has precision 0 unless the truth is empty too; an empty
/// truth has recall 1. Two empty graphs score (1, 1, 1).
pub fn prf(pred: &CausalGraph, truth: &CausalGraph) -> Result<(f64, f64, f64)> {
    same_size(pred, truth)?;
    let pred = pred.without_self_loops();
    let truth = truth.without_self_loops();
    let tp = pred.edges().filter(|&(a, b)| truth.has_edge(a, b)).count() as f64;
    let (np, nt) = (pred.edge_count() as f64, truth.edge_count() as f64);
    if np == 0.0 && nt == 0.0 {
        return Ok((1.0, 1.0, 1.0));
    }
    let precision = if np > 0.0 { tp / np } else { 0.0 };
    let recall = if nt > 0.0 { tp / nt } else { 1.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok((precision, recall, f1))
}

/// Structural Hamming distance: one unit per unordered pair of types whose
/// connection differs (missing, extra or reversed).
pub fn shd(pred: &CausalGraph, truth: &CausalGraph) -> Result<usize> {
    same_size(pred, truth)?;
    let n = pred.type_count();
    let mut count = 0;
    for a in 0..n {
        for b in a + 1..n {
            let p = (pred.has_edge(a, b), pred.has_edge(b, a));
            let t = (truth.has_edge(a, b), truth.has_edge(b, a));
            if p != t {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn ancestors_of(graph: &CausalGraph, seeds: &[bool]) -> Vec<bool> {
    let n = graph.type_count();
    let mut seen = seeds.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&i| seeds[i]).collect();
    while let Some(u) = stack.pop() {
        for p in graph.parents(u) {
            if !seen[p] {
                seen[p] = true;
                stack.push(p);
            }
        }
    }
    seen
}

/// d-separation of `x` and `y` given `z` via the moralized ancestral graph.
pub fn d_separated(graph: &CausalGraph, x: usize, y: usize, z: &[bool]) -> bool {
    let n = graph.type_count();
    let mut seeds = z.to_vec();
    seeds[x] = true;
    seeds[y] = true;
    let keep = ancestors_of(graph, &seeds);
    let mut adj = vec![vec![false; n]; n];
    for u in (0..n).filter(|&u| keep[u]) {
        let parents: Vec<usize> = graph.parents(u).into_iter().filter(|&p| keep[p]).collect();
        for &p in &parents {
            adj[p][u] = true;
            adj[u][p] = true;
        }
        for (idx, &a) in parents.iter().enumerate() {
            for &b in &parents[idx + 1..] {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![x];
    seen[x] = true;
    while let Some(u) = stack.pop() {
        if u == y {
            return false;
        }
        for w in 0..n {
            if adj[u][w] && !seen[w] && keep[w] && !z[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    true
}

/// Whether adjusting for `z` identifies the effect of `x` on `y` in `truth`
/// (generalized adjustment criterion).
pub fn is_valid_adjustment(truth: &CausalGraph, x: usize, y: usize, z: &[bool]) -> bool {
    let n = truth.type_count();
    let from_x = truth.descendants(x);
    let mut y_seed = vec![false; n];
    y_seed[y] = true;
    let to_y = ancestors_of(truth, &y_seed);
    // nodes other than x on directed paths x -> ... -> y
    let on_causal: Vec<bool> = (0..n).map(|w| w != x && from_x[w] && to_y[w]).collect();
    let mut forbidden = vec![false; n];
    for w in (0..n).filter(|&w| on_causal[w]) {
        for (f, d) in forbidden.iter_mut().zip(truth.descendants(w)) {
            *f |= d;
        }
    }
    forbidden[x] = true;
    if (0..n).any(|w| z[w] && forbidden[w]) {
        return false;
    }
    // proper back-door graph: drop the first edge of every causal path
    let mut pbd = truth.clone();
    for c in truth.children(x) {
        if on_causal[c] {
            pbd.remove(x, c);
        }
    }
    d_separated(&pbd, x, y, z)
}

/// Structural intervention distance between a predicted DAG and the true DAG.
pub fn sid(pred: &CausalGraph, truth: &CausalGraph) -> Result<usize> {
    same_size(pred, truth)?;
    let pred = pred.without_self_loops();
    let truth = truth.without_self_loops();
    if !truth.is_acyclic() {
        return Err(Error::NotDag("true graph has a directed cycle".into()));
    }
    if !pred.is_acyclic() {
        return Err(Error::NotDag("predicted graph has a directed cycle; repair it first".into()));
    }
    let n = truth.type_count();
    let mut mistakes = 0;
    for i in 0..n {
        let mut z = vec![false; n];
        for p in pred.parents(i) {
            z[p] = true;
        }
        let below = truth.descendants(i);
        for j in (0..n).filter(|&j| j != i) {
            let ok = if z[j] {
                // the prediction claims i has no effect on its parent j
                !below[j]
            } else {
                is_valid_adjustment(&truth, i, j, &z)
            };
            if !ok {
                mistakes += 1;
            }
        }
    }
    Ok(mistakes)
}

/// Break cycles by repeatedly removing the cycle edge with the lowest
/// max-over-k posterior, ties going to the lexicographically smallest edge.
pub fn dag_repair(pred: &CausalGraph, posterior: &CausalTensor) -> Result<CausalGraph> {
    if posterior.type_count() != pred.type_count() {
        return Err(Error::shape("posterior and graph disagree on the number of types"));
    }
    let mut graph = pred.without_self_loops();
    while let Some(cycle) = graph.find_cycle() {
        let weakest = cycle
            .iter()
            .copied()
            .min_by(|&a, &b| {
                posterior
                    .max_over_k(a.0, a.1)
                    .total_cmp(&posterior.max_over_k(b.0, b.1))
                    .then(a.cmp(&b))
            })
            .expect("a cycle has at least one edge");
        graph.remove(weakest.0, weakest.1);
    }
    Ok(graph)
}

/// All metrics at once. Cyclic predictions are repaired before SID, using the
/// posterior when given (otherwise all edges tie).
pub fn evaluate(pred: &CausalGraph, truth: &CausalGraph, posterior: Option<&CausalTensor>) -> Result<MetricReport> {
    let (precision, recall, f1) = prf(pred, truth)?;
    let shd = shd(pred, truth)?;
    let stripped = pred.without_self_loops();
    let (dag, repaired) = if stripped.is_acyclic() {
        (stripped, false)
    } else {
        let flat;
        let weights = match posterior {
            Some(p) => p,
            None => {
                flat = CausalTensor::filled(0, pred.type_count(), 0.5);
                &flat
            }
        };
        (dag_repair(&stripped, weights)?, true)
    };
    Ok(MetricReport {
        precision,
        recall,
        f1,
        shd,
        sid: sid(&dag, truth)?,
        dag_repair_applied: repaired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, edges: &[(usize, usize)]) -> CausalGraph {
        CausalGraph::new(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn prf_examples() {
        let truth = g(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        assert_eq!(prf(&truth, &truth).unwrap(), (1.0, 1.0, 1.0));
        let half = g(4, &[(0, 1), (2, 3)]);
        assert_eq!(prf(&half, &truth).unwrap().1, 0.5);
        let p = g(4, &[(0, 1), (1, 0)]);
        let t = g(4, &[(0, 1)]);
        let (pr, rc, f1) = prf(&p, &t).unwrap();
        assert_eq!((pr, rc), (0.5, 1.0));
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(prf(&g(4, &[]), &truth).unwrap(), (0.0, 0.0, 0.0));
        assert!(prf(&g(3, &[]), &truth).is_err());
    }

    #[test]
    fn self_loops_ignored() {
        let truth = g(2, &[(0, 1)]);
        assert_eq!(prf(&g(2, &[(0, 1), (1, 1)]), &truth).unwrap(), (1.0, 1.0, 1.0));
        assert_eq!(shd(&g(2, &[(0, 0)]), &g(2, &[])).unwrap(), 0);
    }

    #[test]
    fn shd_examples() {
        let a = g(3, &[(0, 1), (1, 2)]);
        assert_eq!(shd(&a, &a).unwrap(), 0);
        assert_eq!(shd(&g(2, &[(1, 0)]), &g(2, &[(0, 1)])).unwrap(), 1);
        assert_eq!(shd(&g(3, &[(0, 1), (0, 2)]), &g(3, &[(0, 1), (1, 2)])).unwrap(), 2);
    }

    #[test]
    fn sid_examples() {
        let truth = g(2, &[(0, 1)]);
        assert_eq!(sid(&truth, &truth).unwrap(), 0);
        assert_eq!(sid(&g(2, &[(1, 0)]), &truth).unwrap(), 2);
        assert_eq!(sid(&g(2, &[]), &truth).unwrap(), 1);
        assert!(sid(&truth, &g(2, &[(0, 1), (1, 0)])).is_err());
    }

    #[test]
    fn sid_reference_values() {
        // chain 0 -> 1 -> 2 against the collider 0 -> 2 <- 1
        let chain = g(3, &[(0, 1), (1, 2)]);
        let empty = g(3, &[]);
        // empty guess: all adjustments are the empty set; wrong for (1,0), (2,0), (2,1)
        assert_eq!(sid(&empty, &chain).unwrap(), 3);
        // truth empty: every guess parent set is valid except claims of no effect
        assert_eq!(sid(&chain, &empty).unwrap(), 0);
    }

    #[test]
    fn repair_keeps_stronger_edge() {
        let mut p = CausalTensor::zeros(0, 2);
        p.set(0, 0, 1, 0.9);
        p.set(0, 1, 0, 0.6);
        let repaired = dag_repair(&g(2, &[(0, 1), (1, 0)]), &p).unwrap();
        assert_eq!(repaired.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        let dag = g(3, &[(0, 1), (1, 2)]);
        assert_eq!(dag_repair(&dag, &CausalTensor::zeros(0, 3)).unwrap(), dag);
    }

    #[test]
    fn repair_ties_go_lexicographic() {
        let tie = CausalTensor::filled(1, 3, 0.7);
        let repaired = dag_repair(&g(3, &[(0, 1), (1, 2), (2, 0)]), &tie).unwrap();
        assert!(!repaired.has_edge(0, 1));
        assert!(repaired.is_acyclic());
    }

    #[test]
    fn evaluate_flags_repair() {
        let truth = g(2, &[(0, 1)]);
        let r = evaluate(&g(2, &[(0, 1), (1, 0)]), &truth, None).unwrap();
        assert!(r.dag_repair_applied);
        let r = evaluate(&truth, &truth, None).unwrap();
        assert!(!r.dag_repair_applied);
        assert_eq!((r.shd, r.sid, r.f1), (0, 0, 1.0));
    }
}

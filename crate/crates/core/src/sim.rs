//! Synthetic topological event sequences with a known causal DAG.
//!
//! Root events arrive per (type, node) as homogeneous Poisson processes.
//! Every event of type `i` on node `n` in bin `t` then spawns, for each causal
//! edge `i -> j` and each node within `k_active` hops of `n`, a
//! `Poisson(alpha_ij)` number of type-`j` children, each `d` bins later with
//! `d` drawn from a geometric(1/2) law truncated to `1..=max_lag`. Children
//! spawn children in turn. Everything past the horizon is dropped, and
//! timestamps are bin midpoints.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{geodesic_masks, CausalGraph, TopologyNetwork};
use crate::ingest::{bin_index, EventRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub node_count: usize,
    pub type_count: usize,
    /// Base intensity range, events per second per (type, node).
    pub mu_range: [f64; 2],
    /// Expected children per causing event, per edge and per reached node.
    pub alpha_range: [f64; 2],
    pub delta: f64,
    pub horizon: f64,
    /// Keep only the earliest events when set.
    pub max_events: Option<usize>,
    pub k_active: usize,
    pub causal_edge_density: f64,
    /// Fraction of the non-tree node pairs added on top of the spanning tree.
    pub topology_extra_edge_fraction: f64,
    pub max_lag: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            node_count: 40,
            type_count: 20,
            mu_range: [0.00003, 0.00005],
            alpha_range: [0.02, 0.03],
            delta: 2.0,
            horizon: 625_000.0,
            max_events: Some(20_000),
            k_active: 1,
            causal_edge_density: 0.1,
            topology_extra_edge_fraction: 0.05,
            max_lag: 3,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                field: field.to_owned(),
                message,
            })
        };
        if self.node_count == 0 {
            return bad("node_count", "must be at least 1".into());
        }
        if self.type_count == 0 {
            return bad("type_count", "must be at least 1".into());
        }
        for (name, [lo, hi]) in [("mu_range", self.mu_range), ("alpha_range", self.alpha_range)] {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return bad(name, format!("[{lo}, {hi}] must satisfy 0 <= lo <= hi < inf"));
            }
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta", format!("{} must be positive", self.delta));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon", format!("{} must be positive", self.horizon));
        }
        for (name, value) in [
            ("causal_edge_density", self.causal_edge_density),
            ("topology_extra_edge_fraction", self.topology_extra_edge_fraction),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return bad(name, format!("{value} must lie in [0, 1]"));
            }
        }
        if self.max_lag == 0 {
            return bad("max_lag", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        ((self.horizon / self.delta).ceil() as usize).max(1)
    }
}

fn uniform_in<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Uniform random labelled spanning tree (Prüfer decoding) plus extra edges.
pub fn sample_topology<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<TopologyNetwork> {
    let n = config.node_count;
    if n == 0 {
        return Err(Error::invalid("node_count must be at least 1"));
    }
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 2 {
        edges.push((0, 1));
    } else if n > 2 {
        let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
        let mut degree = vec![1usize; n];
        for &c in &code {
            degree[c] += 1;
        }
        let mut leaves: std::collections::BTreeSet<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
        for &c in &code {
            let leaf = leaves.pop_first().expect("a Prüfer code always leaves a leaf");
            edges.push((leaf, c));
            degree[c] -= 1;
            if degree[c] == 1 {
                leaves.insert(c);
            }
        }
        let rest: Vec<usize> = leaves.into_iter().collect();
        edges.push((rest[0], rest[1]));
    }
    let tree = TopologyNetwork::new(n, edges)?;

    let spare: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| !tree.has_edge(a, b))
        .collect();
    let extra = (config.topology_extra_edge_fraction * spare.len() as f64).round() as usize;
    let chosen = rand::seq::index::sample(rng, spare.len(), extra.min(spare.len()));
    TopologyNetwork::new(n, tree.edges().chain(chosen.iter().map(|i| spare[i])))
}

/// Random DAG: shuffle a topological order, keep each forward pair with
/// probability `causal_edge_density`.
pub fn sample_causal_dag<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<CausalGraph> {
    let v = config.type_count;
    let mut order: Vec<usize> = (0..v).collect();
    order.shuffle(rng);
    let mut graph = CausalGraph::new(v, [])?;
    for a in 0..v {
        for b in a + 1..v {
            if rng.random::<f64>() < config.causal_edge_density {
                graph.insert(order[a], order[b]);
            }
        }
    }
    Ok(graph)
}

/// A generated event with the index of the event that spawned it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracedEvent {
    pub record: EventRecord,
    pub parent: Option<usize>,
}

struct Pending {
    event_type: usize,
    node: usize,
    bin: usize,
    parent: Option<usize>,
}

/// Like [`generate_events`] but keeps parent links. Output is ordered by
/// (bin, node, type) and parents always precede their children.
pub fn generate_traced<R: Rng + ?Sized>(
    topology: &TopologyNetwork,
    dag: &CausalGraph,
    config: &SimConfig,
    rng: &mut R,
) -> Result<Vec<TracedEvent>> {
    config.validate()?;
    if topology.node_count() != config.node_count || dag.type_count() != config.type_count {
        return Err(Error::shape(format!(
            "config expects {} nodes / {} types, got {} / {}",
            config.node_count,
            config.type_count,
            topology.node_count(),
            dag.type_count()
        )));
    }
    let bins = config.bin_count();
    let delta = config.delta;
    let mu: Vec<f64> = (0..config.type_count).map(|_| uniform_in(rng, config.mu_range)).collect();
    let children: Vec<Vec<(usize, f64)>> = (0..config.type_count)
        .map(|i| {
            dag.children(i)
                .into_iter()
                .map(|j| (j, uniform_in(rng, config.alpha_range)))
                .collect()
        })
        .collect();
    let masks = geodesic_masks(topology, config.k_active);
    let reach: Vec<Vec<usize>> = (0..config.node_count)
        .map(|n| {
            let mut r: Vec<usize> = (0..=config.k_active).flat_map(|k| masks.ring(n, k).iter().copied()).collect();
            r.sort_unstable();
            r
        })
        .collect();
    // P(d) proportional to 2^-d on 1..=max_lag
    let lag_weights: Vec<f64> = (1..=config.max_lag).map(|d| 0.5f64.powi(d as i32)).collect();
    let lag_total: f64 = lag_weights.iter().sum();

    let mut generated: Vec<Pending> = Vec::new();
    let mut queue = VecDeque::new();
    for v in 0..config.type_count {
        for n in 0..config.node_count {
            let count = poisson(rng, mu[v] * config.horizon);
            for _ in 0..count {
                let t = rng.random_range(0.0..config.horizon);
                let bin = bin_index(t, delta).min(bins - 1);
                queue.push_back(generated.len());
                generated.push(Pending {
                    event_type: v,
                    node: n,
                    bin,
                    parent: None,
                });
            }
        }
    }
    while let Some(idx) = queue.pop_front() {
        let (v, n, bin) = {
            let p = &generated[idx];
            (p.event_type, p.node, p.bin)
        };
        for &(j, alpha) in &children[v] {
            for &target in &reach[n] {
                for _ in 0..poisson(rng, alpha) {
                    let mut u = rng.random::<f64>() * lag_total;
                    let mut lag = config.max_lag;
                    for (d, w) in lag_weights.iter().enumerate() {
                        if u < *w {
                            lag = d + 1;
                            break;
                        }
                        u -= w;
                    }
                    let child_bin = bin + lag;
                    if child_bin < bins {
                        queue.push_back(generated.len());
                        generated.push(Pending {
                            event_type: j,
                            node: target,
                            bin: child_bin,
                            parent: Some(idx),
                        });
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..generated.len()).collect();
    order.sort_by_key(|&i| (generated[i].bin, generated[i].node, generated[i].event_type, i));
    if let Some(cap) = config.max_events {
        order.truncate(cap);
    }
    let mut position = vec![usize::MAX; generated.len()];
    for (pos, &i) in order.iter().enumerate() {
        position[i] = pos;
    }
    Ok(order
        .iter()
        .map(|&i| {
            let p = &generated[i];
            TracedEvent {
                record: EventRecord {
                    event_type: p.event_type,
                    node: p.node,
                    timestamp: ((p.bin as f64 + 0.5) * delta).min(config.horizon),
                },
                parent: p.parent.map(|q| position[q]),
            }
        })
        .collect())
}

pub fn generate_events<R: Rng + ?Sized>(
    topology: &TopologyNetwork,
    dag: &CausalGraph,
    config: &SimConfig,
    rng: &mut R,
) -> Result<Vec<EventRecord>> {
    Ok(generate_traced(topology, dag, config, rng)?
        .into_iter()
        .map(|e| e.record)
        .collect())
}

/// Everything one simulation run produces.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub topology: TopologyNetwork,
    pub dag: CausalGraph,
    pub events: Vec<EventRecord>,
}

/// Topology, DAG and events from a single seeded stream.
pub fn simulate(config: &SimConfig) -> Result<SimulatedData> {
    use rand::SeedableRng;
    config.validate()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let topology = sample_topology(config, &mut rng)?;
    let dag = sample_causal_dag(config, &mut rng)?;
    let events = generate_events(&topology, &dag, config, &mut rng)?;
    Ok(SimulatedData {
        topology,
        dag,
        events,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::ingest::discretize;

    fn small() -> SimConfig {
        SimConfig {
            node_count: 6,
            type_count: 4,
            mu_range: [0.01, 0.02],
            alpha_range: [0.1, 0.2],
            delta: 2.0,
            horizon: 2000.0,
            max_events: None,
            causal_edge_density: 0.5,
            ..SimConfig::default()
        }
    }

    #[test]
    fn topology_sizes_and_connectivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut cfg = small();
        cfg.node_count = 1;
        assert_eq!(sample_topology(&cfg, &mut rng).unwrap().edge_count(), 0);
        cfg.topology_extra_edge_fraction = 0.0;
        for n in 2..30 {
            cfg.node_count = n;
            let t = sample_topology(&cfg, &mut rng).unwrap();
            assert_eq!(t.edge_count(), n - 1);
            assert!(t.is_connected());
        }
        cfg.topology_extra_edge_fraction = 0.3;
        for n in 2..30 {
            cfg.node_count = n;
            assert!(sample_topology(&cfg, &mut rng).unwrap().is_connected());
        }
    }

    #[test]
    fn dag_density_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut cfg = small();
        cfg.causal_edge_density = 0.0;
        assert_eq!(sample_causal_dag(&cfg, &mut rng).unwrap().edge_count(), 0);
        cfg.causal_edge_density = 1.0;
        cfg.type_count = 3;
        let g = sample_causal_dag(&cfg, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.is_acyclic());
    }

    #[test]
    fn no_roots_no_events() {
        let mut cfg = small();
        cfg.mu_range = [0.0, 0.0];
        assert!(simulate(&cfg).unwrap().events.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simulate(&small()).unwrap();
        let b = simulate(&small()).unwrap();
        assert_eq!(a.events, b.events);
        let mut other = small();
        other.seed = 9;
        assert_ne!(simulate(&other).unwrap().events, a.events);
    }

    #[test]
    fn timestamps_round_trip_to_bins() {
        let cfg = small();
        let data = simulate(&cfg).unwrap();
        assert!(!data.events.is_empty());
        let tensor = discretize(&data.events, cfg.type_count, cfg.node_count, cfg.delta, cfg.horizon).unwrap();
        assert_eq!(tensor.total(), data.events.len() as u64);
        for e in &data.events {
            let b = bin_index(e.timestamp, cfg.delta);
            assert!((e.timestamp - (b as f64 + 0.5) * cfg.delta).abs() < 1e-9);
        }
    }

    #[test]
    fn children_follow_edges_and_topology() {
        let cfg = small();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let topo = sample_topology(&cfg, &mut rng).unwrap();
        let dag = sample_causal_dag(&cfg, &mut rng).unwrap();
        let events = generate_traced(&topo, &dag, &cfg, &mut rng).unwrap();
        let masks = geodesic_masks(&topo, cfg.k_active);
        let mut children = 0;
        for e in &events {
            if let Some(p) = e.parent {
                children += 1;
                let parent = events[p].record;
                assert!(dag.has_edge(parent.event_type, e.record.event_type));
                assert!(masks.distance(parent.node, e.record.node).is_some());
                let lag = bin_index(e.record.timestamp, cfg.delta) - bin_index(parent.timestamp, cfg.delta);
                assert!((1..=cfg.max_lag).contains(&lag));
            }
        }
        assert!(children > 0);
    }

    #[test]
    fn max_events_truncates_earliest() {
        let mut cfg = small();
        let all = simulate(&cfg).unwrap().events;
        cfg.max_events = Some(10);
        let few = simulate(&cfg).unwrap().events;
        assert_eq!(few, all[..10]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = small();
        cfg.mu_range = [0.2, 0.1];
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "mu_range"));
        let mut cfg = small();
        cfg.causal_edge_density = 1.5;
        assert!(cfg.validate().is_err());
    }
}

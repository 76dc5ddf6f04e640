//! Independent oracles: exhaustive graph enumeration, statistical checks on
//! the simulator and the edge sampler, and structural identities of the model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use tnpar::graph::{acyclicity_h_rows, geodesic_masks, CausalGraph};
use tnpar::ingest::{discretize, make_windows};
use tnpar::metrics::{shd, sid};
use tnpar::model::{build_encoder_input, causal_filter, decode, gumbel_sample, ModelDims, PosteriorZ, RelaxationConfig, TnparModel};
use tnpar::sim::{generate_events, generate_traced, sample_causal_dag, sample_topology, SimConfig};

mod common;

use common::{kahn_acyclic, oracle_shd, oracle_sid, three_node_dags};

#[test]
fn there_are_25_three_node_dags() {
    assert_eq!(three_node_dags().len(), 25);
}

#[test]
fn sid_and_shd_match_path_oracles_on_all_three_node_pairs() {
    let dags = three_node_dags();
    for truth in &dags {
        for pred in &dags {
            assert_eq!(sid(pred, truth).unwrap(), oracle_sid(pred, truth), "pred {pred:?} truth {truth:?}");
            assert_eq!(shd(pred, truth).unwrap(), oracle_shd(pred, truth));
        }
    }
}

#[test]
fn metric_fixtures() {
    let fwd = CausalGraph::new(2, [(0, 1)]).unwrap();
    let rev = CausalGraph::new(2, [(1, 0)]).unwrap();
    assert_eq!((shd(&rev, &fwd).unwrap(), sid(&rev, &fwd).unwrap()), (1, 2));
    assert_eq!(sid(&CausalGraph::empty(2), &fwd).unwrap(), 1);
}

#[test]
fn h_agrees_with_kahn_on_all_three_node_digraphs() {
    let off = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
    for mask in 0..64u32 {
        let mut rows = vec![vec![0.0; 3]; 3];
        let mut adj = vec![vec![false; 3]; 3];
        for (bit, &(i, j)) in off.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                rows[i][j] = 1.0;
                adj[i][j] = true;
            }
        }
        let h = acyclicity_h_rows(&rows).unwrap();
        assert_eq!(h.abs() < 1e-12, kahn_acyclic(&adj), "mask {mask:06b}: h = {h}");
    }
}

#[test]
fn hard_sample_frequency_matches_q() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for q in [0.1f64, 0.5, 0.9] {
        let posterior = PosteriorZ { values: vec![(q / (1.0 - q)).ln()], beta: 1.0 };
        let draws = 100_000;
        let ones: f64 = (0..draws).map(|_| gumbel_sample(&posterior, 0.5, &mut rng, true).unwrap().hard[0]).sum();
        let mean = ones / draws as f64;
        assert!((mean - q).abs() < 0.01, "q = {q}: empirical {mean}");
    }
}

/// P(|soft - hard| < eps) in closed form: the soft sample is
/// logistic((logit q + L) / tau) with L standard logistic, so it is within eps
/// of its rounding unless |logit q + L| < tau * ln((1 - eps) / eps).
fn expected_closeness(q: f64, tau: f64, eps: f64) -> f64 {
    let cdf = |x: f64| 1.0 / (1.0 + (-x).exp());
    let band = tau * ((1.0 - eps) / eps).ln();
    let centre = -(q / (1.0 - q)).ln();
    1.0 - (cdf(centre + band) - cdf(centre - band))
}

#[test]
fn soft_samples_approach_hard_ones_as_tau_shrinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 40_000;
    for q in [0.1f64, 0.3, 0.5, 0.9] {
        let posterior = PosteriorZ { values: vec![(q / (1.0 - q)).ln()], beta: 1.0 };
        let mut last = 0.0;
        for tau in [0.1, 0.01, 0.001] {
            let close = (0..draws)
                .filter(|_| {
                    let s = gumbel_sample(&posterior, tau, &mut rng, false).unwrap();
                    (s.soft[0] - s.hard[0]).abs() < 0.01
                })
                .count() as f64
                / draws as f64;
            let expected = expected_closeness(q, tau, 0.01);
            // binomial standard error is below 0.0025 at this draw count
            assert!((close - expected).abs() < 0.01, "q {q} tau {tau}: {close} vs {expected}");
            assert!(close >= last - 0.01);
            last = close;
        }
        assert!(last >= 0.99, "q {q}: {last} at tau 0.001");
    }
}

fn dims_and_model(seed: u64) -> (ModelDims, TnparModel) {
    let dims = ModelDims { type_count: 3, k_max: 1, omega: 2 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = TnparModel::new(dims, &[8], RelaxationConfig { beta: 1.0, tau: 0.5 }, &mut rng).unwrap();
    (dims, model)
}

#[test]
fn zero_edges_make_the_effect_blind_to_the_cause() {
    let (dims, model) = dims_and_model(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (cause, effect) = (0, 2);
    let mut a: Vec<f64> = (0..dims.edge_slots()).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
    for k in 0..=dims.k_max {
        a[dims.edge_index(k, cause, effect)] = 0.0;
    }
    for _ in 0..50 {
        let history: Vec<f64> = (0..dims.history_len()).map(|_| f64::from(rng.random_range(0..4u8))).collect();
        let mut perturbed = history.clone();
        for lag in 0..dims.omega {
            for k in 0..=dims.k_max {
                perturbed[dims.history_index(lag, cause, k)] += f64::from(rng.random_range(1..6u8));
            }
        }
        let base = decode(&model.decoder, &causal_filter(&history, &a, effect, &dims).unwrap(), effect, &dims).unwrap();
        let moved = decode(&model.decoder, &causal_filter(&perturbed, &a, effect, &dims).unwrap(), effect, &dims).unwrap();
        assert_eq!(base.to_bits(), moved.to_bits());
    }
}

#[test]
fn filtering_commutes_with_distance_aggregation() {
    let cfg = SimConfig {
        node_count: 6,
        type_count: 3,
        mu_range: [0.3, 0.3],
        alpha_range: [0.0, 0.0],
        horizon: 20.0,
        max_events: None,
        topology_extra_edge_fraction: 0.2,
        ..SimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let topo = sample_topology(&cfg, &mut rng).unwrap();
    let dag = sample_causal_dag(&cfg, &mut rng).unwrap();
    let events = generate_events(&topo, &dag, &cfg, &mut rng).unwrap();
    let tensor = discretize(&events, 3, 6, cfg.delta, cfg.horizon).unwrap();
    let masks = geodesic_masks(&topo, 1);
    let dims = ModelDims { type_count: 3, k_max: 1, omega: 2 };
    let a: Vec<f64> = (0..dims.edge_slots()).map(|_| rng.random::<f64>()).collect();
    let ones = vec![1.0; dims.edge_slots()];
    for w in make_windows(&tensor, dims.omega).unwrap() {
        for node in 0..6 {
            let input = build_encoder_input(&w, node, &masks, &dims).unwrap();
            assert_eq!(causal_filter(&input.history, &ones, 1, &dims).unwrap(), input.history);
            for target in 0..3 {
                let aggregated_then_weighted = causal_filter(&input.history, &a, target, &dims).unwrap();
                // weight each node's raw count first, then sum over the ring
                let mut weighted_then_aggregated = vec![0.0; dims.history_len()];
                for (lag, slice) in w.history.iter().enumerate() {
                    for v in 0..3 {
                        for k in 0..=1 {
                            let weight = a[dims.edge_index(k, v, target)];
                            weighted_then_aggregated[dims.history_index(lag, v, k)] =
                                masks.ring(node, k).iter().map(|&m| weight * f64::from(slice[v * 6 + m])).sum();
                        }
                    }
                }
                for (x, y) in aggregated_then_weighted.iter().zip(&weighted_then_aggregated) {
                    assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                }
            }
        }
    }
}

fn calibration_config(alpha: f64, seed: u64) -> SimConfig {
    SimConfig {
        node_count: 10,
        type_count: 10,
        mu_range: [0.05, 0.05],
        alpha_range: [alpha, alpha],
        horizon: 1000.0,
        max_events: None,
        causal_edge_density: 0.3,
        seed,
        ..SimConfig::default()
    }
}

#[test]
fn root_rates_sit_within_three_sigma() {
    let cfg = calibration_config(0.0, 17);
    let data = tnpar::sim::simulate(&cfg).unwrap();
    let mut counts = vec![0.0f64; 100];
    for e in &data.events {
        counts[e.event_type * 10 + e.node] += 1.0;
    }
    let mean = 0.05 * 1000.0;
    let within = counts.iter().filter(|&&c| (c - mean).abs() <= 3.0 * mean.sqrt()).count();
    assert!(within >= 95, "{within}/100 cells within 3 sigma");
}

#[test]
fn types_are_independent_without_causal_edges() {
    let cfg = SimConfig {
        node_count: 4,
        type_count: 3,
        mu_range: [0.05, 0.08],
        alpha_range: [0.5, 0.5],
        horizon: 4000.0,
        max_events: None,
        causal_edge_density: 0.0,
        seed: 23,
        ..SimConfig::default()
    };
    let data = tnpar::sim::simulate(&cfg).unwrap();
    assert_eq!(data.dag.edge_count(), 0);
    let tensor = discretize(&data.events, 3, 4, cfg.delta, cfg.horizon).unwrap();
    let active = |t: usize, v: usize| (0..4).any(|n| tensor.get(t, v, n) > 0);
    let chi2 = ChiSquared::new(1.0).unwrap();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let mut table = [[0.0f64; 2]; 2];
        for t in 0..tensor.bin_count() {
            table[usize::from(active(t, a))][usize::from(active(t, b))] += 1.0;
        }
        let total: f64 = table.iter().flatten().sum();
        let mut stat = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let expected = (table[r][0] + table[r][1]) * (table[0][c] + table[1][c]) / total;
                stat += (table[r][c] - expected).powi(2) / expected;
            }
        }
        let p = 1.0 - chi2.cdf(stat);
        assert!(p > 0.01, "types {a},{b}: chi2 {stat:.3}, p {p:.4}");
    }
}

#[test]
fn effects_trace_back_to_causes() {
    let cfg = SimConfig {
        node_count: 5,
        type_count: 2,
        mu_range: [0.02, 0.02],
        alpha_range: [0.8, 0.8],
        horizon: 500.0,
        max_events: None,
        ..SimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let topo = sample_topology(&cfg, &mut rng).unwrap();
    let dag = CausalGraph::new(2, [(0, 1)]).unwrap();
    let events = generate_traced(&topo, &dag, &cfg, &mut rng).unwrap();
    let mut spawned = 0;
    for e in &events {
        if e.record.event_type != 1 {
            assert!(e.parent.is_none(), "causes have no parents here");
            continue;
        }
        if let Some(mut p) = e.parent {
            spawned += 1;
            // follow the chain to its root, which must be a cause event
            while let Some(q) = events[p].parent {
                p = q;
            }
            assert_eq!(events[p].record.event_type, 0);
            assert!(events[p].record.timestamp < e.record.timestamp);
        }
    }
    assert!(spawned > 0);
}

#[test]
fn more_excitation_means_more_events() {
    let mean_count = |alpha: f64| -> f64 {
        (0..20u64)
            .map(|seed| {
                let mut cfg = calibration_config(alpha, seed);
                cfg.alpha_range = [alpha * 2.0 / 3.0, alpha];
                cfg.mu_range = [0.002, 0.004];
                tnpar::sim::simulate(&cfg).unwrap().events.len() as f64
            })
            .sum::<f64>()
            / 20.0
    };
    assert!(mean_count(0.03) > mean_count(0.0));
}

#[test]
fn simulation_is_reproducible() {
    let cfg = calibration_config(0.3, 99);
    let a = tnpar::sim::simulate(&cfg).unwrap().events;
    let b = tnpar::sim::simulate(&cfg).unwrap().events;
    assert_eq!(a, b);
}

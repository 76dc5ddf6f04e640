//! Reference implementations shared by the oracle and acceptance targets.
#![allow(dead_code)]

use tnpar::graph::CausalGraph;

/// Every DAG on three labelled nodes (25 of them).
pub fn three_node_dags() -> Vec<CausalGraph> {
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut out = Vec::new();
    for code in 0..27 {
        let mut c = code;
        let mut edges = Vec::new();
        for &(a, b) in &pairs {
            match c % 3 {
                1 => edges.push((a, b)),
                2 => edges.push((b, a)),
                _ => {}
            }
            c /= 3;
        }
        let g = CausalGraph::new(3, edges).unwrap();
        if kahn_acyclic(&g.adjacency()) {
            out.push(g);
        }
    }
    out
}

pub fn kahn_acyclic(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let mut indeg: Vec<usize> = (0..n).map(|j| (0..n).filter(|&i| adj[i][j]).count()).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(u) = ready.pop() {
        seen += 1;
        for v in 0..n {
            if adj[u][v] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.push(v);
                }
            }
        }
    }
    seen == n
}

/// All simple paths between `a` and `b` in the skeleton, as node sequences.
pub fn simple_paths(g: &CausalGraph, a: usize, b: usize) -> Vec<Vec<usize>> {
    fn walk(g: &CausalGraph, path: &mut Vec<usize>, b: usize, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == b {
            out.push(path.clone());
            return;
        }
        for v in 0..g.type_count() {
            if !path.contains(&v) && (g.has_edge(u, v) || g.has_edge(v, u)) {
                path.push(v);
                walk(g, path, b, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, &mut vec![a], b, &mut out);
    out
}

pub fn descendants(g: &CausalGraph, x: usize) -> Vec<usize> {
    let mut seen = vec![x];
    let mut i = 0;
    while i < seen.len() {
        for c in g.children(seen[i]) {
            if !seen.contains(&c) {
                seen.push(c);
            }
        }
        i += 1;
    }
    seen
}

pub fn blocked(g: &CausalGraph, path: &[usize], z: &[usize]) -> bool {
    (1..path.len() - 1).any(|m| {
        let (p, v, n) = (path[m - 1], path[m], path[m + 1]);
        let collider = g.has_edge(p, v) && g.has_edge(n, v);
        if collider {
            !descendants(g, v).iter().any(|d| z.contains(d))
        } else {
            z.contains(&v)
        }
    })
}

/// Adjustment-criterion check written out over explicit paths.
pub fn oracle_sid(pred: &CausalGraph, truth: &CausalGraph) -> usize {
    let n = truth.type_count();
    let mut wrong = 0;
    for i in 0..n {
        let z = pred.parents(i);
        for j in (0..n).filter(|&j| j != i) {
            if z.contains(&j) {
                if descendants(truth, i).contains(&j) {
                    wrong += 1;
                }
                continue;
            }
            let paths = simple_paths(truth, i, j);
            let causal: Vec<&Vec<usize>> = paths.iter().filter(|p| p.windows(2).all(|w| truth.has_edge(w[0], w[1]))).collect();
            let forbidden: Vec<usize> = causal.iter().flat_map(|p| p[1..].iter().flat_map(|&w| descendants(truth, w))).collect();
            let bad_member = z.iter().any(|x| forbidden.contains(x));
            let open_backdoor = paths
                .iter()
                .filter(|p| !p.windows(2).all(|w| truth.has_edge(w[0], w[1])))
                .any(|p| !blocked(truth, p, &z));
            if bad_member || open_backdoor {
                wrong += 1;
            }
        }
    }
    wrong
}

pub fn oracle_shd(a: &CausalGraph, b: &CausalGraph) -> usize {
    let n = a.type_count();
    let mut extra_or_missing = 0;
    let mut reversed = 0;
    for x in 0..n {
        for y in x + 1..n {
            let ea = [a.has_edge(x, y), a.has_edge(y, x)];
            let eb = [b.has_edge(x, y), b.has_edge(y, x)];
            if ea == eb {
                continue;
            }
            if ea == [eb[1], eb[0]] {
                reversed += 1;
            } else {
                extra_or_missing += 1;
            }
        }
    }
    extra_or_missing + reversed
}

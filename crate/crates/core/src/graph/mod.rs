//! Graph data types over nodes and event types: the undirected topology,
//! its geodesic distance masks, causal tensors over event types, the
//! trace-exponential acyclicity function and the graph read-off rule.

pub(crate) mod io;

pub use io::{read_graph_json, read_topology_csv, write_graph_json, write_topology_csv, GraphFile};

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// Undirected network of physical nodes. Edges are stored as `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyNetwork {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl TopologyNetwork {
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::invalid("topology needs at least one node"));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) references a node outside 0..{node_count}"
                )));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop on node {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            node_count,
            edges: set,
        })
    }

    /// A topology with no edges.
    pub fn isolated(node_count: usize) -> Result<Self> {
        Self::new(node_count, [])
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let adj = self.neighbors();
        bfs(&adj, source)
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(Option::is_some)
    }
}

fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &w in &adj[u] {
            if dist[w].is_none() {
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Binary indicator matrices `B_0..=B_K`: `B_k[i][j]` is set when the hop
/// distance between nodes `i` and `j` is exactly `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMasks {
    k_max: usize,
    node_count: usize,
    // distance[i * n + j], only for pairs within k_max
    distance: Vec<Option<usize>>,
    // rings[j][k]: nodes at distance k from j
    rings: Vec<Vec<Vec<usize>>>,
}

impl DistanceMasks {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> bool {
        self.distance[i * self.node_count + j] == Some(k)
    }

    /// Distance between `i` and `j` if it does not exceed `k_max`.
    pub fn distance(&self, i: usize, j: usize) -> Option<usize> {
        self.distance[i * self.node_count + j]
    }

    /// Nodes at geodesic distance exactly `k` from `node`, ascending.
    pub fn ring(&self, node: usize, k: usize) -> &[usize] {
        &self.rings[node][k]
    }

    /// Dense copy of slice `k` as rows of 0/1.
    pub fn slice(&self, k: usize) -> Vec<Vec<u8>> {
        (0..self.node_count)
            .map(|i| {
                (0..self.node_count)
                    .map(|j| u8::from(self.get(k, i, j)))
                    .collect()
            })
            .collect()
    }

    /// Keep only slices `0..=k_max`.
    pub fn truncated(&self, k_max: usize) -> Self {
        let k_max = k_max.min(self.k_max);
        let distance = self
            .distance
            .iter()
            .map(|d| d.filter(|&d| d <= k_max))
            .collect();
        let rings = self
            .rings
            .iter()
            .map(|r| r[..=k_max].to_vec())
            .collect();
        Self {
            k_max,
            node_count: self.node_count,
            distance,
            rings,
        }
    }
}

pub fn geodesic_masks(topology: &TopologyNetwork, k_max: usize) -> DistanceMasks {
    let n = topology.node_count();
    let adj = topology.neighbors();
    let mut distance = vec![None; n * n];
    let mut rings = vec![vec![Vec::new(); k_max + 1]; n];
    for i in 0..n {
        for (j, d) in bfs(&adj, i).into_iter().enumerate() {
            if let Some(d) = d.filter(|&d| d <= k_max) {
                distance[i * n + j] = Some(d);
                rings[i][d].push(j);
            }
        }
    }
    DistanceMasks {
        k_max,
        node_count: n,
        distance,
        rings,
    }
}

/// Directed graph over event types. Self-loops are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    type_count: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl CausalGraph {
    pub fn new(type_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if type_count == 0 {
            return Err(Error::invalid("causal graph needs at least one event type"));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= type_count || b >= type_count {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) references a type outside 0..{type_count}"
                )));
            }
            set.insert((a, b));
        }
        Ok(Self {
            type_count,
            edges: set,
        })
    }

    pub fn empty(type_count: usize) -> Self {
        Self {
            type_count,
            edges: BTreeSet::new(),
        }
    }

    /// Every ordered pair of distinct types.
    pub fn complete(type_count: usize) -> Self {
        let edges = (0..type_count)
            .flat_map(|i| (0..type_count).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        Self { type_count, edges }
    }

    pub fn type_count(&self) -> usize {
        self.type_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn insert(&mut self, from: usize, to: usize) {
        assert!(from < self.type_count && to < self.type_count);
        self.edges.insert((from, to));
    }

    pub fn remove(&mut self, from: usize, to: usize) -> bool {
        self.edges.remove(&(from, to))
    }

    pub fn without_self_loops(&self) -> Self {
        Self {
            type_count: self.type_count,
            edges: self.edges.iter().copied().filter(|(a, b)| a != b).collect(),
        }
    }

    pub fn parents(&self, node: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, b)| b == node)
            .map(|&(a, _)| a)
            .collect()
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        self.edges
            .range((node, 0)..(node + 1, 0))
            .map(|&(_, b)| b)
            .collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.type_count]; self.type_count];
        for &(a, b) in &self.edges {
            m[a][b] = true;
        }
        m
    }

    /// Returns the edges of one directed cycle, if any exists. Self-loops count.
    pub fn find_cycle(&self) -> Option<Vec<(usize, usize)>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.type_count;
        let children: Vec<Vec<usize>> = (0..n).map(|i| self.children(i)).collect();
        let mut mark = vec![Mark::New; n];
        let mut parent = vec![usize::MAX; n];
        for root in 0..n {
            if mark[root] != Mark::New {
                continue;
            }
            // iterative DFS: (node, next child position)
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Active;
            while let Some(&mut (u, ref mut pos)) = stack.last_mut() {
                if *pos < children[u].len() {
                    let w = children[u][*pos];
                    *pos += 1;
                    match mark[w] {
                        Mark::New => {
                            mark[w] = Mark::Active;
                            parent[w] = u;
                            stack.push((w, 0));
                        }
                        Mark::Active => {
                            let mut cycle = vec![(u, w)];
                            let mut cur = u;
                            while cur != w {
                                let p = parent[cur];
                                cycle.push((p, cur));
                                cur = p;
                            }
                            cycle.reverse();
                            return Some(cycle);
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[u] = Mark::Done;
                    stack.pop();
                }
            }
        }
        None
    }

    pub fn is_acyclic(&self) -> bool {
        self.find_cycle().is_none()
    }

    /// Nodes reachable from `node` by directed paths, including `node`.
    pub fn descendants(&self, node: usize) -> Vec<bool> {
        let mut seen = vec![false; self.type_count];
        let mut stack = vec![node];
        seen[node] = true;
        while let Some(u) = stack.pop() {
            for w in self.children(u) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// `K + 1` matrices of shape `|V| x |V|`, indexed `[k][cause][effect]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalTensor {
    k_max: usize,
    type_count: usize,
    values: Vec<f64>,
}

impl CausalTensor {
    pub fn zeros(k_max: usize, type_count: usize) -> Self {
        Self::filled(k_max, type_count, 0.0)
    }

    pub fn filled(k_max: usize, type_count: usize, value: f64) -> Self {
        Self {
            k_max,
            type_count,
            values: vec![value; (k_max + 1) * type_count * type_count],
        }
    }

    pub fn from_flat(k_max: usize, type_count: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (k_max + 1) * type_count * type_count {
            return Err(Error::shape(format!(
                "causal tensor expects {} values, got {}",
                (k_max + 1) * type_count * type_count,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("causal tensor entry {v} outside [0, 1]")));
        }
        Ok(Self {
            k_max,
            type_count,
            values,
        })
    }

    /// Build from nested `[k][i][j]` arrays.
    pub fn from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let k_max = nested
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::shape("causal tensor needs at least one slice"))?;
        let type_count = nested[0].len();
        let mut values = Vec::with_capacity(nested.len() * type_count * type_count);
        for slice in nested {
            if slice.len() != type_count || slice.iter().any(|row| row.len() != type_count) {
                return Err(Error::shape("causal tensor slices must all be |V| x |V|"));
            }
            for row in slice {
                values.extend_from_slice(row);
            }
        }
        Self::from_flat(k_max, type_count, values)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let v = self.type_count;
        self.values
            .chunks(v * v)
            .map(|slice| slice.chunks(v).map(<[f64]>::to_vec).collect())
            .collect()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn type_count(&self) -> usize {
        self.type_count
    }

    #[inline]
    pub fn index(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.type_count + i) * self.type_count + j
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[self.index(k, i, j)]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        let idx = self.index(k, i, j);
        self.values[idx] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn max_over_k(&self, i: usize, j: usize) -> f64 {
        (0..=self.k_max)
            .map(|k| self.get(k, i, j))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::shape(format!(
                "expected a square matrix with {dim} columns per row"
            )));
        }
        Ok(Self {
            dim,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn pow(&self, mut exp: usize) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.matmul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }
}

/// `tr((I + g/d)^d) - d` for a `d x d` nonnegative matrix with zero diagonal.
/// Zero exactly when `g` has no directed cycle.
pub fn acyclicity_h(g: &SquareMatrix) -> f64 {
    acyclicity_h_with_grad(g).0
}

/// Value of [`acyclicity_h`] together with its gradient `((I + g/d)^(d-1))^T`.
pub fn acyclicity_h_with_grad(g: &SquareMatrix) -> (f64, SquareMatrix) {
    let d = g.dim();
    if d == 0 {
        return (0.0, SquareMatrix::zeros(0));
    }
    let mut m = SquareMatrix::identity(d);
    for (dst, src) in m.data.iter_mut().zip(&g.data) {
        *dst += src / d as f64;
    }
    let pow_dm1 = m.pow(d - 1);
    let full = pow_dm1.matmul(&m);
    (full.trace() - d as f64, pow_dm1.transpose())
}

/// Acyclicity for nested rows; rejects non-square input.
pub fn acyclicity_h_rows(rows: &[Vec<f64>]) -> Result<f64> {
    Ok(acyclicity_h(&SquareMatrix::from_rows(rows)?))
}

/// `G[i][j] = sum_k A_k[i][j]` with the diagonal zeroed.
pub fn aggregate_g(a: &CausalTensor) -> SquareMatrix {
    let v = a.type_count();
    let mut g = SquareMatrix::zeros(v);
    for k in 0..=a.k_max() {
        for i in 0..v {
            for j in 0..v {
                if i != j {
                    g.data[i * v + j] += a.get(k, i, j);
                }
            }
        }
    }
    g
}

/// Reads the causal graph off a posterior: `i -> j` is kept when some slice
/// reaches `threshold`. Also returns the per-slice hard tensor.
pub fn extract_graph(posterior: &CausalTensor, threshold: f64) -> Result<(CausalGraph, CausalTensor)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold {threshold} must lie in (0, 1)")));
    }
    let v = posterior.type_count();
    let hard_values = posterior
        .as_slice()
        .iter()
        .map(|&p| if p >= threshold { 1.0 } else { 0.0 })
        .collect();
    let hard = CausalTensor::from_flat(posterior.k_max(), v, hard_values)?;
    let mut graph = CausalGraph::empty(v);
    for i in 0..v {
        for j in 0..v {
            if posterior.max_over_k(i, j) >= threshold {
                graph.insert(i, j);
            }
        }
    }
    Ok((graph, hard))
}

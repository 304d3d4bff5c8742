//! Weighted undirected graphs, seeded instance generation and the classical
//! minimum spanning tree used as ground truth.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative size of the tie-breaking offset added per cost rank.
pub const JITTER_STEP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least {min} vertices, got {got}")]
    TooFewVertices { min: usize, got: usize },
    #[error("root {root} out of range for {num_vertices} vertices")]
    RootOutOfRange { root: usize, num_vertices: usize },
    #[error("edge ({u}, {v}) references a vertex outside 0..{num_vertices}")]
    VertexOutOfRange { u: usize, v: usize, num_vertices: usize },
    #[error("self loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({u}, {v}) has non-positive or non-finite cost {cost}")]
    InvalidCost { u: usize, v: usize, cost: f64 },
    #[error("graph is disconnected: vertex {0} is unreachable from the root")]
    Disconnected(usize),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("edge ({0}, {1}) is not part of the graph")]
    UnknownEdge(usize, usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed graph file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: f64,
}

impl Edge {
    pub fn key(&self) -> (usize, usize) {
        ordered(self.u, self.v)
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Connected, positively weighted, undirected graph with a designated root.
///
/// Edges are stored with `u < v` and sorted by `(u, v)`; that order is the
/// canonical edge order used by the QUBO variable registry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedGraph {
    num_vertices: usize,
    root: usize,
    edges: Vec<Edge>,
}

#[derive(Deserialize)]
struct RawGraph {
    num_vertices: usize,
    #[serde(default)]
    root: usize,
    edges: Vec<Edge>,
}

impl<'de> Deserialize<'de> for WeightedGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawGraph::deserialize(d)?;
        WeightedGraph::new(raw.num_vertices, raw.root, raw.edges).map_err(serde::de::Error::custom)
    }
}

impl WeightedGraph {
    pub fn new(num_vertices: usize, root: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if num_vertices < 2 {
            return Err(GraphError::TooFewVertices { min: 2, got: num_vertices });
        }
        if root >= num_vertices {
            return Err(GraphError::RootOutOfRange { root, num_vertices });
        }
        let mut seen = HashSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            if e.u >= num_vertices || e.v >= num_vertices {
                return Err(GraphError::VertexOutOfRange { u: e.u, v: e.v, num_vertices });
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if !(e.cost.is_finite() && e.cost > 0.0) {
                return Err(GraphError::InvalidCost { u: e.u, v: e.v, cost: e.cost });
            }
            let (u, v) = e.key();
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            normalized.push(Edge { u, v, cost: e.cost });
        }
        normalized.sort_by_key(Edge::key);
        let g = WeightedGraph { num_vertices, root, edges: normalized };
        if let Some(v) = g.first_unreachable() {
            return Err(GraphError::Disconnected(v));
        }
        Ok(g)
    }

    /// Returns the same graph rooted at a different vertex.
    pub fn with_root(mut self, root: usize) -> Result<Self, GraphError> {
        if root >= self.num_vertices {
            return Err(GraphError::RootOutOfRange { root, num_vertices: self.num_vertices });
        }
        self.root = root;
        Ok(self)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cost(&self, u: usize, v: usize) -> Option<f64> {
        let key = ordered(u, v);
        self.edges
            .binary_search_by_key(&key, Edge::key)
            .ok()
            .map(|i| self.edges[i].cost)
    }

    pub fn max_cost(&self) -> f64 {
        self.edges.iter().map(|e| e.cost).fold(0.0, f64::max)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.u == v || e.v == v).count()
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut dsu = DisjointSets::new(self.num_vertices);
        for e in &self.edges {
            dsu.union(e.u, e.v);
        }
        (0..self.num_vertices).find(|&v| !dsu.same(self.root, v))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let mut text = self.to_json();
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

/// A set of undirected edges, each stored as `(min, max)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeSet(BTreeSet<(usize, usize)>);

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, u: usize, v: usize) -> bool {
        self.0.insert(ordered(u, v))
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.0.contains(&ordered(u, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied()
    }

    pub fn total_cost(&self, g: &WeightedGraph) -> Result<f64, GraphError> {
        self.iter()
            .map(|(u, v)| g.cost(u, v).ok_or(GraphError::UnknownEdge(u, v)))
            .sum()
    }
}

impl FromIterator<(usize, usize)> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        EdgeSet(iter.into_iter().map(|(u, v)| ordered(u, v)).collect())
    }
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets containing `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub num_vertices: usize,
    pub edge_probability: f64,
    pub weight_low: f64,
    pub weight_high: f64,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn new(num_vertices: usize, edge_probability: f64, seed: u64) -> Self {
        GeneratorParams { num_vertices, edge_probability, weight_low: 1.0, weight_high: 10.0, seed }
    }

    pub fn with_weights(mut self, low: f64, high: f64) -> Self {
        self.weight_low = low;
        self.weight_high = high;
        self
    }
}

/// Draws a connected random graph rooted at vertex 0.
///
/// Every vertex pair becomes an edge with probability `edge_probability` and a
/// uniform cost in `[weight_low, weight_high)`. If the result is disconnected,
/// edges of a random spanning-tree skeleton are added wherever they join two
/// components. Finally each cost is shifted by `rank * JITTER_STEP * range`,
/// where `rank` is its position in the sorted cost order, so that all costs
/// are distinct and the MST is unique.
pub fn generate_random_graph(params: &GeneratorParams) -> Result<WeightedGraph, GraphError> {
    let GeneratorParams { num_vertices: n, edge_probability: p, weight_low, weight_high, seed } =
        *params;
    if n < 2 {
        return Err(GraphError::TooFewVertices { min: 2, got: n });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::InvalidParameter(format!("edge probability {p} not in (0, 1]")));
    }
    if !(weight_low > 0.0 && weight_low < weight_high && weight_high.is_finite()) {
        return Err(GraphError::InvalidParameter(format!(
            "weight range [{weight_low}, {weight_high}] must satisfy 0 < low < high"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_cost = |rng: &mut ChaCha8Rng| rng.gen_range(weight_low..weight_high);

    let mut edges: Vec<Edge> = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                let cost = draw_cost(&mut rng);
                edges.push(Edge { u, v, cost });
            }
        }
    }

    let mut dsu = DisjointSets::new(n);
    for e in &edges {
        dsu.union(e.u, e.v);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        let child = order[i];
        if dsu.union(parent, child) {
            let (u, v) = ordered(parent, child);
            let cost = draw_cost(&mut rng);
            edges.push(Edge { u, v, cost });
        }
    }

    edges.sort_by_key(Edge::key);
    let mut ranked: Vec<usize> = (0..edges.len()).collect();
    ranked.sort_by(|&a, &b| edges[a].cost.total_cmp(&edges[b].cost).then(a.cmp(&b)));
    let step = JITTER_STEP * (weight_high - weight_low);
    for (rank, &i) in ranked.iter().enumerate() {
        edges[i].cost += rank as f64 * step;
    }

    WeightedGraph::new(n, 0, edges)
}

/// Kruskal's algorithm. Ties are broken by canonical edge order.
pub fn kruskal_mst(g: &WeightedGraph) -> (EdgeSet, f64) {
    let mut idx: Vec<usize> = (0..g.edges.len()).collect();
    idx.sort_by(|&a, &b| g.edges[a].cost.total_cmp(&g.edges[b].cost).then(a.cmp(&b)));
    let mut dsu = DisjointSets::new(g.num_vertices);
    let mut tree = EdgeSet::new();
    let mut total = 0.0;
    for i in idx {
        let e = g.edges[i];
        if dsu.union(e.u, e.v) {
            tree.insert(e.u, e.v);
            total += e.cost;
            if tree.len() + 1 == g.num_vertices {
                break;
            }
        }
    }
    (tree, total)
}

/// True iff `s` is an acyclic, connected edge set touching every vertex.
pub fn is_spanning_tree(g: &WeightedGraph, s: &EdgeSet) -> bool {
    if s.len() + 1 != g.num_vertices {
        return false;
    }
    let mut dsu = DisjointSets::new(g.num_vertices);
    for (u, v) in s.iter() {
        if u >= g.num_vertices || v >= g.num_vertices || !dsu.union(u, v) {
            return false;
        }
    }
    // n-1 merges without a cycle leave a single component
    true
}

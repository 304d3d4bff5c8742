//! QUBO encoding of the minimum spanning tree problem.
//!
//! Two families of binary variables are used. Edge variables `e(u->v)` select
//! a directed tree edge pointing away from the root; the root only has
//! outgoing edge variables. Order variables `x(u,v)` with `u < v` state that
//! non-root vertex `u` precedes `v` in a topological order. The Hamiltonian is
//!
//! ```text
//! H = P * (F1 + F2 + F3) + O,   P = (|V| - 1) * max_cost + 1
//! ```
//!
//! with `F1` penalizing intransitive orderings of every non-root triple, `F2`
//! tying edge directions to the ordering, `F3 = sum_v (1 - indeg(v))^2` over
//! non-root vertices, and `O` the total cost of selected edges.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::graph::{EdgeSet, WeightedGraph};

#[derive(Debug, Error, PartialEq)]
pub enum QuboError {
    #[error("assignment has {got} bits, model has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range for {n_vars} variables")]
    IndexOutOfRange { index: usize, n_vars: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    /// Directed edge `from -> to` is part of the tree.
    Edge { from: usize, to: usize },
    /// Non-root vertex `u` precedes `v` (always `u < v`).
    Order { u: usize, v: usize },
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Edge { from, to } => write!(f, "e_{from}_{to}"),
            Variable::Order { u, v } => write!(f, "x_{u}_{v}"),
        }
    }
}

/// Bijection between encoding variables and qubit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableRegistry {
    entries: Vec<Variable>,
    index: HashMap<Variable, usize>,
}

impl VariableRegistry {
    /// Root edges in canonical edge order, then both directions of every
    /// non-root edge (`min->max` before `max->min`), then order variables for
    /// every pair of non-root vertices in lexicographic order.
    pub fn for_graph(g: &WeightedGraph) -> Self {
        let root = g.root();
        let mut entries = Vec::new();
        for e in g.edges() {
            if e.u == root {
                entries.push(Variable::Edge { from: root, to: e.v });
            } else if e.v == root {
                entries.push(Variable::Edge { from: root, to: e.u });
            }
        }
        for e in g.edges() {
            if e.u != root && e.v != root {
                entries.push(Variable::Edge { from: e.u, to: e.v });
                entries.push(Variable::Edge { from: e.v, to: e.u });
            }
        }
        let others = non_root_vertices(g);
        for (i, &u) in others.iter().enumerate() {
            for &v in &others[i + 1..] {
                entries.push(Variable::Order { u, v });
            }
        }
        let index = entries.iter().enumerate().map(|(i, &var)| (var, i)).collect();
        VariableRegistry { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Variable] {
        &self.entries
    }

    pub fn get(&self, var: Variable) -> Option<usize> {
        self.index.get(&var).copied()
    }

    pub fn variable(&self, index: usize) -> Option<Variable> {
        self.entries.get(index).copied()
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<usize> {
        self.get(Variable::Edge { from, to })
    }

    pub fn order(&self, u: usize, v: usize) -> Option<usize> {
        self.get(Variable::Order { u, v })
    }

    /// Edge variables pointing into `v`, in registry order.
    pub fn incoming(&self, v: usize) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, var)| match *var {
                Variable::Edge { to, .. } if to == v => Some(i),
                _ => None,
            })
            .collect()
    }

    pub fn descriptors(&self) -> Vec<String> {
        self.entries.iter().map(ToString::to_string).collect()
    }
}

fn non_root_vertices(g: &WeightedGraph) -> Vec<usize> {
    (0..g.num_vertices()).filter(|&v| v != g.root()).collect()
}

/// Quadratic pseudo-Boolean function `c + sum_i l_i b_i + sum_{i<j} q_ij b_i b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    n_vars: usize,
    constant: f64,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
}

impl QuboModel {
    pub fn new(n_vars: usize) -> Self {
        QuboModel { n_vars, constant: 0.0, linear: BTreeMap::new(), quadratic: BTreeMap::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn linear(&self) -> &BTreeMap<usize, f64> {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn add_linear(&mut self, i: usize, c: f64) -> Result<(), QuboError> {
        self.check(i)?;
        *self.linear.entry(i).or_insert(0.0) += c;
        Ok(())
    }

    /// Adds `c * b_i * b_j`; `i == j` folds into the linear term since `b^2 = b`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, c: f64) -> Result<(), QuboError> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return self.add_linear(i, c);
        }
        let key = if i < j { (i, j) } else { (j, i) };
        *self.quadratic.entry(key).or_insert(0.0) += c;
        Ok(())
    }

    fn check(&self, i: usize) -> Result<(), QuboError> {
        if i < self.n_vars {
            Ok(())
        } else {
            Err(QuboError::IndexOutOfRange { index: i, n_vars: self.n_vars })
        }
    }

    /// Multiplies every coefficient (constant included) by `s`.
    pub fn scaled(mut self, s: f64) -> Self {
        self.constant *= s;
        self.linear.values_mut().for_each(|c| *c *= s);
        self.quadratic.values_mut().for_each(|c| *c *= s);
        self
    }

    /// Termwise sum of two models over the same variables.
    pub fn plus(mut self, other: &QuboModel) -> Result<Self, QuboError> {
        if other.n_vars != self.n_vars {
            return Err(QuboError::LengthMismatch { expected: self.n_vars, got: other.n_vars });
        }
        self.constant += other.constant;
        for (&i, &c) in &other.linear {
            self.add_linear(i, c)?;
        }
        for (&(i, j), &c) in &other.quadratic {
            self.add_quadratic(i, j, c)?;
        }
        Ok(self)
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<f64, QuboError> {
        if bits.len() != self.n_vars {
            return Err(QuboError::LengthMismatch { expected: self.n_vars, got: bits.len() });
        }
        Ok(self.energy_with(|i| bits[i]))
    }

    /// Energy of the basis state `z`, where bit `i` of `z` is variable `i`.
    ///
    /// Accumulates terms in the same order as [`QuboModel::evaluate`], so both
    /// give bit-identical results.
    pub fn evaluate_index(&self, z: usize) -> f64 {
        self.energy_with(|i| (z >> i) & 1 == 1)
    }

    fn energy_with(&self, bit: impl Fn(usize) -> bool) -> f64 {
        let mut e = self.constant;
        for (&i, &c) in &self.linear {
            if bit(i) {
                e += c;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if bit(i) && bit(j) {
                e += c;
            }
        }
        e
    }

    /// JSON export: `{"n_vars", "constant", "linear": {"i": c}, "quadratic": {"i,j": c}, "registry"}`.
    pub fn to_json(&self, registry: &VariableRegistry) -> Value {
        let linear: Map<String, Value> =
            self.linear.iter().map(|(i, c)| (i.to_string(), json!(c))).collect();
        let quadratic: Map<String, Value> =
            self.quadratic.iter().map(|((i, j), c)| (format!("{i},{j}"), json!(c))).collect();
        json!({
            "n_vars": self.n_vars,
            "constant": self.constant,
            "linear": linear,
            "quadratic": quadratic,
            "registry": registry.descriptors(),
        })
    }
}

/// Penalty weight `(|V| - 1) * max_cost + 1`.
pub fn penalty_weight(g: &WeightedGraph) -> f64 {
    (g.num_vertices() - 1) as f64 * g.max_cost() + 1.0
}

/// The encoding split into its four unweighted parts.
#[derive(Debug, Clone)]
pub struct MstComponents {
    pub acyclicity: QuboModel,
    pub edge_order: QuboModel,
    pub connectivity: QuboModel,
    pub cost: QuboModel,
}

impl MstComponents {
    pub fn build(g: &WeightedGraph, reg: &VariableRegistry) -> Self {
        let n = reg.len();
        let others = non_root_vertices(g);
        // all indices below come from the registry built for this graph
        let idx = |var: Variable| reg.get(var).expect("registry covers the graph");

        let mut acyclicity = QuboModel::new(n);
        for (a, &u) in others.iter().enumerate() {
            for (b, &v) in others.iter().enumerate().skip(a + 1) {
                for &w in &others[b + 1..] {
                    let uv = idx(Variable::Order { u, v });
                    let vw = idx(Variable::Order { u: v, v: w });
                    let uw = idx(Variable::Order { u, v: w });
                    acyclicity.add_linear(uw, 1.0).unwrap();
                    acyclicity.add_quadratic(uv, vw, 1.0).unwrap();
                    acyclicity.add_quadratic(uv, uw, -1.0).unwrap();
                    acyclicity.add_quadratic(uw, vw, -1.0).unwrap();
                }
            }
        }

        let mut edge_order = QuboModel::new(n);
        for e in g.edges().iter().filter(|e| e.u != g.root() && e.v != g.root()) {
            let fwd = idx(Variable::Edge { from: e.u, to: e.v });
            let back = idx(Variable::Edge { from: e.v, to: e.u });
            let ord = idx(Variable::Order { u: e.u, v: e.v });
            edge_order.add_linear(fwd, 1.0).unwrap();
            edge_order.add_quadratic(fwd, ord, -1.0).unwrap();
            edge_order.add_quadratic(back, ord, 1.0).unwrap();
        }

        // (1 - sum e)^2 = 1 - sum e + 2 sum_{a<b} e_a e_b
        let mut connectivity = QuboModel::new(n);
        for &v in &others {
            let incoming = reg.incoming(v);
            connectivity.add_constant(1.0);
            for (k, &a) in incoming.iter().enumerate() {
                connectivity.add_linear(a, -1.0).unwrap();
                for &b in &incoming[k + 1..] {
                    connectivity.add_quadratic(a, b, 2.0).unwrap();
                }
            }
        }

        let mut cost = QuboModel::new(n);
        for (i, var) in reg.entries().iter().enumerate() {
            if let Variable::Edge { from, to } = *var {
                let c = g.cost(from, to).expect("edge variables come from graph edges");
                cost.add_linear(i, c).unwrap();
            }
        }

        MstComponents { acyclicity, edge_order, connectivity, cost }
    }

    pub fn combine(&self, penalty: f64) -> QuboModel {
        self.acyclicity
            .clone()
            .plus(&self.edge_order)
            .and_then(|m| m.plus(&self.connectivity))
            .map(|m| m.scaled(penalty))
            .and_then(|m| m.plus(&self.cost))
            .expect("components share one registry")
    }
}

/// Builds `H = P * (F1 + F2 + F3) + O` together with its variable registry.
pub fn build_mst_qubo(g: &WeightedGraph) -> (QuboModel, VariableRegistry) {
    let reg = VariableRegistry::for_graph(g);
    let model = MstComponents::build(g, &reg).combine(penalty_weight(g));
    (model, reg)
}

/// Number of nonzero penalty contributions of each kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct ViolationReport {
    /// Non-root triples whose ordering is cyclic.
    pub acyclicity: usize,
    /// Non-root edges whose selected direction contradicts the ordering.
    pub edge_order: usize,
    /// Non-root vertices without exactly one incoming edge.
    pub connectivity: usize,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.acyclicity == 0 && self.edge_order == 0 && self.connectivity == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSolution {
    pub directed_edges: BTreeSet<(usize, usize)>,
    /// `(u, v)` means `u` precedes `v`, one pair per order variable.
    pub order_relation: BTreeSet<(usize, usize)>,
    pub undirected_edge_set: EdgeSet,
    pub violations: ViolationReport,
}

/// Reads an assignment back into edges, ordering and constraint violations.
pub fn decode(
    bits: &[bool],
    reg: &VariableRegistry,
    g: &WeightedGraph,
) -> Result<DecodedSolution, QuboError> {
    if bits.len() != reg.len() {
        return Err(QuboError::LengthMismatch { expected: reg.len(), got: bits.len() });
    }
    let mut directed_edges = BTreeSet::new();
    let mut order_relation = BTreeSet::new();
    for (i, var) in reg.entries().iter().enumerate() {
        match *var {
            Variable::Edge { from, to } if bits[i] => {
                directed_edges.insert((from, to));
            }
            Variable::Edge { .. } => {}
            Variable::Order { u, v } => {
                order_relation.insert(if bits[i] { (u, v) } else { (v, u) });
            }
        }
    }
    let undirected_edge_set = directed_edges.iter().copied().collect();

    let others = non_root_vertices(g);
    let x = |u: usize, v: usize| bits[reg.order(u, v).expect("order variable")];
    let mut violations = ViolationReport::default();
    for (a, &u) in others.iter().enumerate() {
        for (b, &v) in others.iter().enumerate().skip(a + 1) {
            for &w in &others[b + 1..] {
                let (uv, vw, uw) = (x(u, v), x(v, w), x(u, w));
                // cyclic iff uv == vw and uw disagrees with them
                if uv == vw && uw != uv {
                    violations.acyclicity += 1;
                }
            }
        }
    }
    for e in g.edges().iter().filter(|e| e.u != g.root() && e.v != g.root()) {
        let ord = x(e.u, e.v);
        let fwd = directed_edges.contains(&(e.u, e.v));
        let back = directed_edges.contains(&(e.v, e.u));
        if (fwd && !ord) || (back && ord) {
            violations.edge_order += 1;
        }
    }
    for &v in &others {
        let indeg = directed_edges.iter().filter(|&&(_, to)| to == v).count();
        if indeg != 1 {
            violations.connectivity += 1;
        }
    }

    Ok(DecodedSolution { directed_edges, order_relation, undirected_edge_set, violations })
}

/// Bits of basis index `z` over `n` variables, least significant first.
pub fn bits_of(z: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (z >> i) & 1 == 1).collect()
}

pub fn index_of(bits: &[bool]) -> usize {
    bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1usize << i).sum()
}

/// Bitstring with variable 0 first.
pub fn bitstring(z: usize, n: usize) -> String {
    (0..n).map(|i| if (z >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use falqon_mst::graph::{Edge, GeneratorParams, WeightedGraph};
use falqon_mst::sim::{DiagonalHamiltonian, DriverKind, DriverTerm, StateVector};
use falqon_mst::generate_random_graph;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn triangle() -> WeightedGraph {
    WeightedGraph::new(
        3,
        0,
        vec![
            Edge { u: 0, v: 1, cost: 1.0 },
            Edge { u: 1, v: 2, cost: 2.0 },
            Edge { u: 0, v: 2, cost: 3.0 },
        ],
    )
    .unwrap()
}

/// Complete graph on four vertices with costs small enough for `dt = 0.02`
/// Trotter steps to resolve the dynamics.
pub fn k4(seed: u64) -> WeightedGraph {
    generate_random_graph(&GeneratorParams::new(4, 1.0, seed).with_weights(0.05, 0.5)).unwrap()
}

fn pauli(kind: char) -> CMat {
    let z = c(0.0, 0.0);
    match kind {
        'I' => CMat::from_row_slice(2, 2, &[c(1.0, 0.0), z, z, c(1.0, 0.0)]),
        'X' => CMat::from_row_slice(2, 2, &[z, c(1.0, 0.0), c(1.0, 0.0), z]),
        'Y' => CMat::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        _ => unreachable!(),
    }
}

/// `P` acting on `qubit` of an `n`-qubit register; qubit 0 is the least
/// significant bit of the basis index.
pub fn single_qubit_op(kind: char, qubit: usize, n: usize) -> CMat {
    let mut m = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let factor = if q == qubit { pauli(kind) } else { pauli('I') };
        m = m.kronecker(&factor);
    }
    m
}

pub fn dense_driver(d: &DriverTerm, n: usize) -> CMat {
    let dim = 1 << n;
    let op = match d.kind() {
        DriverKind::GlobalX => (0..n).fold(CMat::zeros(dim, dim), |acc, q| acc + single_qubit_op('X', q, n)),
        DriverKind::SingleX(q) => single_qubit_op('X', q, n),
        DriverKind::SingleY(q) => single_qubit_op('Y', q, n),
    };
    op * c(d.weight(), 0.0)
}

pub fn dense_diag(h: &DiagonalHamiltonian) -> CMat {
    let v: Vec<Complex64> = h.energies().iter().map(|&e| c(e, 0.0)).collect();
    CMat::from_diagonal(&nalgebra::DVector::from_vec(v))
}

/// `exp(-i t H)` by nalgebra's Padé-based matrix exponential.
pub fn propagator(h: &CMat, t: f64) -> CMat {
    (h * c(0.0, -t)).exp()
}

pub fn column(psi: &StateVector) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(psi.amplitudes())
}

/// `<psi| i[H_d, H_p] |psi>` as a complex number.
pub fn dense_commutator_expectation(psi: &StateVector, hd: &CMat, hp: &CMat) -> Complex64 {
    let comm = (hd * hp - hp * hd) * c(0.0, 1.0);
    let v = column(psi);
    (v.adjoint() * comm * &v)[(0, 0)]
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// All spanning trees by subset enumeration, each as a list of edges.
pub fn all_spanning_trees(g: &WeightedGraph) -> Vec<Vec<Edge>> {
    let n = g.num_vertices();
    let edges = g.edges();
    let mut trees = Vec::new();
    for mask in 0u64..(1 << edges.len()) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let chosen: Vec<Edge> =
            (0..edges.len()).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
        if connected(n, &chosen) {
            trees.push(chosen);
        }
    }
    trees
}

/// Depth-first reachability from vertex 0.
pub fn connected(n: usize, edges: &[Edge]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for e in edges {
            let other = if e.u == x { e.v } else if e.v == x { e.u } else { continue };
            if !seen[other] {
                seen[other] = true;
                stack.push(other);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn tree_cost(tree: &[Edge]) -> f64 {
    tree.iter().map(|e| e.cost).sum()
}

/// Orientation of an undirected tree away from `root`, as `(parent, child)` pairs.
pub fn orient(tree: &[(usize, usize)], root: usize, n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut seen = vec![false; n];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(x) = stack.pop() {
        for &(a, b) in tree {
            let other = if a == x { b } else if b == x { a } else { continue };
            if !seen[other] {
                seen[other] = true;
                out.push((x, other));
                stack.push(other);
            }
        }
    }
    out
}

/// Orderings of the non-root vertices in which every parent precedes its child.
pub fn count_linear_extensions(arcs: &[(usize, usize)], root: usize, n: usize) -> usize {
    let vertices: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    permutations(&vertices)
        .into_iter()
        .filter(|perm| {
            let pos = |v: usize| perm.iter().position(|&p| p == v).unwrap();
            arcs.iter().filter(|(p, _)| *p != root).all(|&(p, ch)| pos(p) < pos(ch))
        })
        .count()
}

pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

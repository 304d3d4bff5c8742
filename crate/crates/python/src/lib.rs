//! Python bindings: graphs, the MST encoding, and protocol runs.
//!
//! Reports cross the boundary as plain dicts decoded from the same JSON the
//! command-line tool writes.

use std::path::PathBuf;

use falqon_mst::experiment::{self, Instance, RunSettings};
use falqon_mst::graph::{generate_random_graph, Edge, GeneratorParams, WeightedGraph};
use falqon_mst::protocol::{ControlShape, Variant};
use falqon_mst::qubo::{build_mst_qubo, decode, QuboModel, VariableRegistry};
use falqon_mst::sim::{DriverSet, DEFAULT_MAX_QUBITS};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json(py: Python<'_>, s: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

#[pyclass(name = "Graph", module = "falqon_mst_py", frozen)]
pub struct PyGraph {
    inner: WeightedGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (num_vertices, edges, root = 0))]
    fn new(num_vertices: usize, edges: Vec<(usize, usize, f64)>, root: usize) -> PyResult<Self> {
        let edges = edges.into_iter().map(|(u, v, cost)| Edge { u, v, cost }).collect();
        Ok(PyGraph { inner: WeightedGraph::new(num_vertices, root, edges).map_err(err)? })
    }

    /// Seeded random connected graph with distinct costs.
    #[staticmethod]
    #[pyo3(signature = (n, p = 0.5, seed = 0, wmin = 1.0, wmax = 10.0))]
    fn random(n: usize, p: f64, seed: u64, wmin: f64, wmax: f64) -> PyResult<Self> {
        let params = GeneratorParams::new(n, p, seed).with_weights(wmin, wmax);
        Ok(PyGraph { inner: generate_random_graph(&params).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: WeightedGraph::from_json(s).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn root(&self) -> usize {
        self.inner.root()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().iter().map(|e| (e.u, e.v, e.cost)).collect()
    }

    /// Kruskal tree as `(edges, cost)`.
    fn mst(&self) -> (Vec<(usize, usize)>, f64) {
        let (tree, cost) = falqon_mst::kruskal_mst(&self.inner);
        (tree.iter().collect(), cost)
    }

    fn __repr__(&self) -> String {
        format!("Graph(num_vertices={}, edges={})", self.inner.num_vertices(), self.inner.edges().len())
    }
}

#[pyclass(name = "Qubo", module = "falqon_mst_py", frozen)]
pub struct PyQubo {
    graph: WeightedGraph,
    model: QuboModel,
    registry: VariableRegistry,
}

#[pymethods]
impl PyQubo {
    #[new]
    fn new(graph: &PyGraph) -> Self {
        let (model, registry) = build_mst_qubo(&graph.inner);
        PyQubo { graph: graph.inner.clone(), model, registry }
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.model.n_vars()
    }

    /// Variable names in qubit order, e.g. `e_0_1` or `x_1_2`.
    #[getter]
    fn variables(&self) -> Vec<String> {
        self.registry.descriptors()
    }

    fn energy(&self, bits: Vec<bool>) -> PyResult<f64> {
        self.model.evaluate(&bits).map_err(err)
    }

    /// Energy of every basis state; qubit `i` is bit `i` of the index.
    #[pyo3(signature = (max_qubits = DEFAULT_MAX_QUBITS))]
    fn energies(&self, max_qubits: usize) -> PyResult<Vec<f64>> {
        let h = falqon_mst::sim::diagonalize_qubo_with_limit(&self.model, max_qubits).map_err(err)?;
        Ok(h.energies().to_vec())
    }

    /// Decoded tree edges and constraint violation counts for an assignment.
    fn decode(&self, py: Python<'_>, bits: Vec<bool>) -> PyResult<Py<PyAny>> {
        let d = decode(&bits, &self.registry, &self.graph).map_err(err)?;
        let value = serde_json::json!({
            "edges": d.undirected_edge_set.iter().collect::<Vec<_>>(),
            "violations": d.violations,
            "feasible": d.violations.is_feasible(),
        });
        from_json(py, &value.to_string())
    }

    fn to_json(&self) -> String {
        self.model.to_json(&self.registry).to_string()
    }
}

#[pyfunction]
#[pyo3(signature = (graph, max_qubits = DEFAULT_MAX_QUBITS))]
fn verify(py: Python<'_>, graph: &PyGraph, max_qubits: usize) -> PyResult<Py<PyAny>> {
    let report = experiment::verify(&graph.inner, max_qubits).map_err(err)?;
    from_json(py, &serde_json::to_string(&report).map_err(err)?)
}

#[allow(clippy::too_many_arguments)]
fn settings(
    variant: &str,
    dt: f64,
    layers: usize,
    tr_a: f64,
    tr_tf: Option<f64>,
    shape: &str,
    drivers: &str,
    top_n: usize,
) -> PyResult<RunSettings> {
    let multi_drivers = match drivers {
        "x" => DriverSet::PerQubitX,
        "xy" => DriverSet::PerQubitXY,
        other => return Err(err(format!("unknown driver family {other:?}, expected \"x\" or \"xy\""))),
    };
    let s = RunSettings {
        variant: variant.parse::<Variant>().map_err(err)?,
        dt,
        layers,
        tr_a,
        tr_tf,
        shape: shape.parse::<ControlShape>().map_err(err)?,
        multi_drivers,
        top_n,
    };
    s.protocol_config().map_err(err)?;
    Ok(s)
}

/// Runs one variant; the returned report also carries the energy curve.
#[pyfunction]
#[pyo3(signature = (
    graph, variant = "one-drive", dt = 0.02, layers = 500, tr_a = 2.0, tr_tf = None,
    shape = "identity", drivers = "x", top_n = 20, out_dir = None
))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    graph: &PyGraph,
    variant: &str,
    dt: f64,
    layers: usize,
    tr_a: f64,
    tr_tf: Option<f64>,
    shape: &str,
    drivers: &str,
    top_n: usize,
    out_dir: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let s = settings(variant, dt, layers, tr_a, tr_tf, shape, drivers, top_n)?;
    let inst = Instance::new(graph.inner.clone()).map_err(err)?;
    let (report, run) = py
        .detach(|| experiment::run_experiment(&inst, &s, out_dir.as_deref()))
        .map_err(err)?;
    let mut value = serde_json::to_value(&report).map_err(err)?;
    value["variants"][0]["energies"] = serde_json::json!(run.trace.energies());
    value["variants"][0]["distribution"] = serde_json::to_value(&run.distribution).map_err(err)?;
    from_json(py, &value.to_string())
}

/// Runs several variants on the same instance and budget.
#[pyfunction]
#[pyo3(signature = (
    graph, variants, dt = 0.02, layers = 500, tr_a = 2.0, tr_tf = None,
    shape = "identity", drivers = "x", top_n = 20, out_dir = None
))]
#[allow(clippy::too_many_arguments)]
fn compare(
    py: Python<'_>,
    graph: &PyGraph,
    variants: Vec<String>,
    dt: f64,
    layers: usize,
    tr_a: f64,
    tr_tf: Option<f64>,
    shape: &str,
    drivers: &str,
    top_n: usize,
    out_dir: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let all = variants
        .iter()
        .map(|v| settings(v, dt, layers, tr_a, tr_tf, shape, drivers, top_n))
        .collect::<PyResult<Vec<_>>>()?;
    let inst = Instance::new(graph.inner.clone()).map_err(err)?;
    let (report, runs) = py.detach(|| experiment::compare(&inst, &all, out_dir.as_deref())).map_err(err)?;
    let mut value = serde_json::to_value(&report).map_err(err)?;
    for (i, r) in runs.iter().enumerate() {
        value["variants"][i]["energies"] = serde_json::json!(r.trace.energies());
    }
    from_json(py, &value.to_string())
}

#[pymodule]
pub fn falqon_mst_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyQubo>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add("VARIANTS", Variant::ALL.iter().map(|v| v.name()).collect::<Vec<_>>())?;
    Ok(())
}

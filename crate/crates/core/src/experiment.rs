//! Experiment harness behind the command-line interface: encoding
//! verification, single runs, variant comparisons, and their CSV/JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{kruskal_mst, EdgeSet, GraphError, WeightedGraph};
use crate::protocol::{run_protocol, ControlShape, ProtocolConfig, ProtocolError, RunTrace, Variant};
use crate::qubo::{bits_of, bitstring, build_mst_qubo, decode, penalty_weight, QuboModel, VariableRegistry, ViolationReport};
use crate::sim::{diagonalize_qubo_with_limit, DiagonalHamiltonian, DriverSet, DriverTerm, SimError, DEFAULT_MAX_QUBITS};

pub const DEFAULT_DT: f64 = 0.02;
pub const DEFAULT_LAYERS: usize = 500;
pub const DEFAULT_TOP_N: usize = 20;
pub const DEFAULT_TR_A: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

/// Formats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A graph together with its encoding, energy table and classical references.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: WeightedGraph,
    pub qubo: QuboModel,
    pub registry: VariableRegistry,
    pub hamiltonian: DiagonalHamiltonian,
    pub penalty: f64,
    pub mst: EdgeSet,
    pub mst_cost: f64,
    pub e_min: f64,
    pub ground_states: Vec<usize>,
}

impl Instance {
    pub fn new(graph: WeightedGraph) -> Result<Self, ExperimentError> {
        Self::with_qubit_limit(graph, DEFAULT_MAX_QUBITS)
    }

    pub fn with_qubit_limit(graph: WeightedGraph, max_qubits: usize) -> Result<Self, ExperimentError> {
        let (qubo, registry) = build_mst_qubo(&graph);
        let hamiltonian = diagonalize_qubo_with_limit(&qubo, max_qubits)?;
        let (e_min, ground_states) = hamiltonian.ground_states();
        let (mst, mst_cost) = kruskal_mst(&graph);
        let penalty = penalty_weight(&graph);
        Ok(Instance { graph, qubo, registry, hamiltonian, penalty, mst, mst_cost, e_min, ground_states })
    }

    pub fn n_qubits(&self) -> usize {
        self.registry.len()
    }

    pub fn violations(&self, z: usize) -> ViolationReport {
        self.decode(z).1
    }

    fn decode(&self, z: usize) -> (EdgeSet, ViolationReport) {
        let d = decode(&bits_of(z, self.n_qubits()), &self.registry, &self.graph)
            .expect("index width matches registry");
        (d.undirected_edge_set, d.violations)
    }

    /// Feasible and its undirected edges equal the Kruskal tree.
    pub fn decodes_to_mst(&self, z: usize) -> bool {
        let (edges, v) = self.decode(z);
        v.is_feasible() && edges == self.mst
    }

    /// Ground energy equals the MST cost and every ground state decodes to the MST.
    pub fn encoding_sound(&self) -> bool {
        (self.e_min - self.mst_cost).abs() <= 1e-9
            && self.ground_states.iter().all(|&z| self.decodes_to_mst(z))
    }

    pub fn soundness_report(&self) -> SoundnessReport {
        SoundnessReport {
            num_vertices: self.graph.num_vertices(),
            num_edges: self.graph.edges().len(),
            n_qubits: self.n_qubits(),
            penalty: self.penalty,
            kruskal_cost: self.mst_cost,
            e_min: self.e_min,
            ground_state_count: self.ground_states.len(),
            matches: self.encoding_sound(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessReport {
    pub num_vertices: usize,
    pub num_edges: usize,
    pub n_qubits: usize,
    pub penalty: f64,
    pub kruskal_cost: f64,
    pub e_min: f64,
    pub ground_state_count: usize,
    pub matches: bool,
}

impl SoundnessReport {
    pub fn to_text(&self) -> String {
        format!(
            "vertices: {}\nedges: {}\nqubits: {}\npenalty: {}\nkruskal_cost: {}\ne_min: {}\nground_states: {}\nmatch: {}\n",
            self.num_vertices,
            self.num_edges,
            self.n_qubits,
            self.penalty,
            self.kruskal_cost,
            self.e_min,
            self.ground_state_count,
            self.matches
        )
    }
}

/// Builds the instance and reports whether the encoding reproduces Kruskal.
pub fn verify(graph: &WeightedGraph, max_qubits: usize) -> Result<SoundnessReport, ExperimentError> {
    Ok(Instance::with_qubit_limit(graph.clone(), max_qubits)?.soundness_report())
}

fn as_display<S: serde::Serializer>(v: &ControlShape, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// User-facing run parameters, resolved into a [`ProtocolConfig`] per instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub variant: Variant,
    pub dt: f64,
    pub layers: usize,
    pub tr_a: f64,
    /// Total original time for rescaled runs; defaults to `layers * dt`.
    pub tr_tf: Option<f64>,
    #[serde(serialize_with = "as_display")]
    pub shape: ControlShape,
    /// Multi-drive driver family; single-drive variants always use `sum_i X_i`.
    pub multi_drivers: DriverSet,
    pub top_n: usize,
}

impl RunSettings {
    pub fn new(variant: Variant) -> Self {
        RunSettings {
            variant,
            dt: DEFAULT_DT,
            layers: DEFAULT_LAYERS,
            tr_a: DEFAULT_TR_A,
            tr_tf: None,
            shape: ControlShape::Identity,
            multi_drivers: DriverSet::PerQubitX,
            top_n: DEFAULT_TOP_N,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.layers == 0 {
            return Err(ProtocolError::NoLayers.into());
        }
        if self.top_n == 0 {
            return Err(ExperimentError::Invalid("top_n must be at least 1".into()));
        }
        if self.multi_drivers == DriverSet::Global && !self.variant.is_single_drive() {
            return Err(ExperimentError::Invalid("multi-drive variants need per-qubit drivers".into()));
        }
        Ok(())
    }

    pub fn drivers(&self, n_qubits: usize) -> Vec<DriverTerm> {
        if self.variant.is_single_drive() {
            DriverSet::Global.drivers(n_qubits)
        } else {
            self.multi_drivers.drivers(n_qubits)
        }
    }

    /// Rescaled runs use `min(layers, floor((t_f / a) / dt))` layers.
    pub fn protocol_config(&self) -> Result<ProtocolConfig, ExperimentError> {
        self.validate()?;
        let mut cfg = ProtocolConfig::new(self.variant, self.dt, self.layers).with_shape(self.shape);
        if self.variant.is_rescaled() {
            let tf = self.tr_tf.unwrap_or(self.layers as f64 * self.dt);
            cfg = cfg.with_rescaling(self.tr_a, tf)?;
            let fit = cfg.rescaling.expect("just set").layers_for(self.dt);
            if fit == 0 {
                return Err(ExperimentError::Invalid(format!(
                    "rescaled horizon {} is shorter than one step of {}",
                    tf / self.tr_a,
                    self.dt
                )));
            }
            cfg.num_layers = self.layers.min(fit);
        }
        cfg.validate(self.drivers(1).len())?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionRow {
    pub rank: usize,
    pub index: usize,
    pub bitstring: String,
    pub probability: f64,
    pub energy: f64,
    pub decodes_to_mst: bool,
    pub violations: ViolationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantReport {
    pub label: String,
    pub variant: Variant,
    pub settings: RunSettings,
    pub num_layers: usize,
    pub drivers: Vec<String>,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub ground_probability: f64,
    /// 1-based rank of the most probable MST-decoding state.
    pub mst_rank: Option<usize>,
    /// Largest `|norm - 1|` over the final state.
    pub norm_error: f64,
    pub convergence_csv: Option<String>,
    pub distribution_csv: Option<String>,
}

/// Everything produced by one protocol run.
#[derive(Debug, Clone)]
pub struct VariantRun {
    pub report: VariantReport,
    pub trace: RunTrace,
    pub drivers: Vec<DriverTerm>,
    pub distribution: Vec<DistributionRow>,
}

/// Basis indices sorted by descending probability, ties by index.
pub fn probability_order(probabilities: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probabilities.len()).collect();
    idx.sort_by(|&a, &b| probabilities[b].total_cmp(&probabilities[a]).then(a.cmp(&b)));
    idx
}

pub fn run_variant(inst: &Instance, settings: &RunSettings, label: &str) -> Result<VariantRun, ExperimentError> {
    let cfg = settings.protocol_config()?;
    let drivers = settings.drivers(inst.n_qubits());
    let trace = run_protocol(&inst.hamiltonian, &drivers, &cfg)?;
    let probs = trace.final_state.probabilities();
    let order = probability_order(&probs);
    let mst_rank = order.iter().position(|&z| inst.decodes_to_mst(z)).map(|r| r + 1);
    let n = inst.n_qubits();
    let distribution = order
        .iter()
        .take(settings.top_n)
        .enumerate()
        .map(|(r, &z)| {
            let bits = bits_of(z, n);
            DistributionRow {
                rank: r + 1,
                index: z,
                bitstring: bitstring(z, n),
                probability: probs[z],
                energy: inst.qubo.evaluate(&bits).expect("width matches"),
                decodes_to_mst: inst.decodes_to_mst(z),
                violations: inst.violations(z),
            }
        })
        .collect();
    let report = VariantReport {
        label: label.to_string(),
        variant: settings.variant,
        settings: settings.clone(),
        num_layers: cfg.num_layers,
        drivers: drivers.iter().map(DriverTerm::label).collect(),
        initial_energy: trace.initial_energy,
        final_energy: trace.final_energy(),
        ground_probability: trace.final_state.ground_probability(&inst.hamiltonian)?,
        mst_rank,
        norm_error: (trace.final_state.norm_sqr() - 1.0).abs(),
        convergence_csv: None,
        distribution_csv: None,
    };
    Ok(VariantRun { report, trace, drivers, distribution })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub num_vertices: usize,
    pub n_qubits: usize,
    pub penalty: f64,
    pub mst_cost: f64,
    pub mst_edges: Vec<(usize, usize)>,
    pub e_min: f64,
    pub ground_state_count: usize,
    pub encoding_sound: bool,
    pub variants: Vec<VariantReport>,
}

impl ExperimentReport {
    fn new(inst: &Instance, variants: Vec<VariantReport>) -> Self {
        ExperimentReport {
            num_vertices: inst.graph.num_vertices(),
            n_qubits: inst.n_qubits(),
            penalty: inst.penalty,
            mst_cost: inst.mst_cost,
            mst_edges: inst.mst.iter().collect(),
            e_min: inst.e_min,
            ground_state_count: inst.ground_states.len(),
            encoding_sound: inst.encoding_sound(),
            variants,
        }
    }
}

/// Columns: `layer,energy,beta_<driver>...,a_<driver>...`; layer 0 is the
/// initial state and leaves the control columns empty.
pub fn convergence_csv(trace: &RunTrace, drivers: &[DriverTerm]) -> String {
    let mut out = String::from("layer,energy");
    for d in drivers {
        write!(out, ",beta_{}", d.label()).unwrap();
    }
    for d in drivers {
        write!(out, ",a_{}", d.label()).unwrap();
    }
    out.push('\n');
    write!(out, "0,{}", fmt_f64(trace.initial_energy)).unwrap();
    out.push_str(&",".repeat(2 * drivers.len()));
    out.push('\n');
    for r in &trace.records {
        write!(out, "{},{}", r.layer, fmt_f64(r.energy)).unwrap();
        for x in r.beta.iter().chain(&r.a) {
            write!(out, ",{}", fmt_f64(*x)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub const DISTRIBUTION_HEADER: &str = "rank,index,bitstring,probability,energy,decodes_to_mst,acyclicity_violations,edge_order_violations,connectivity_violations";

pub fn distribution_csv(rows: &[DistributionRow]) -> String {
    let mut out = format!("{DISTRIBUTION_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.rank,
            r.index,
            r.bitstring,
            fmt_f64(r.probability),
            fmt_f64(r.energy),
            r.decodes_to_mst,
            r.violations.acyclicity,
            r.violations.edge_order,
            r.violations.connectivity
        )
        .unwrap();
    }
    out
}

/// Long-format `variant,layer,energy` table over several runs.
pub fn merged_convergence_csv(runs: &[VariantRun]) -> String {
    let mut out = String::from("variant,layer,energy\n");
    for run in runs {
        for (k, e) in run.trace.energies().into_iter().enumerate() {
            writeln!(out, "{},{},{}", run.report.label, k, fmt_f64(e)).unwrap();
        }
    }
    out
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<String, ExperimentError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| ExperimentError::Io { path, source })?;
    Ok(name.to_string())
}

fn ensure_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io { path: dir.to_path_buf(), source })
}

fn write_run_files(dir: &Path, run: &mut VariantRun) -> Result<(), ExperimentError> {
    let label = run.report.label.clone();
    run.report.convergence_csv = Some(write_file(
        dir,
        &format!("{label}_convergence.csv"),
        &convergence_csv(&run.trace, &run.drivers),
    )?);
    run.report.distribution_csv =
        Some(write_file(dir, &format!("{label}_distribution.csv"), &distribution_csv(&run.distribution))?);
    Ok(())
}

fn write_summary(dir: &Path, report: &ExperimentReport) -> Result<(), ExperimentError> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(dir, "summary.json", &(json + "\n"))?;
    Ok(())
}

/// Runs one variant and writes `<label>_convergence.csv`,
/// `<label>_distribution.csv` and `summary.json` into `out_dir`.
pub fn run_experiment(
    inst: &Instance,
    settings: &RunSettings,
    out_dir: Option<&Path>,
) -> Result<(ExperimentReport, VariantRun), ExperimentError> {
    let mut run = run_variant(inst, settings, settings.variant.name())?;
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write_run_files(dir, &mut run)?;
    }
    let report = ExperimentReport::new(inst, vec![run.report.clone()]);
    if let Some(dir) = out_dir {
        write_summary(dir, &report)?;
    }
    Ok((report, run))
}

/// Runs every variant on the same instance and budget, concurrently, and
/// additionally writes `convergence.csv` with all energy curves.
pub fn compare(
    inst: &Instance,
    settings: &[RunSettings],
    out_dir: Option<&Path>,
) -> Result<(ExperimentReport, Vec<VariantRun>), ExperimentError> {
    if settings.len() < 2 {
        return Err(ExperimentError::Invalid(format!(
            "compare needs at least two variants, got {}",
            settings.len()
        )));
    }
    let labels = unique_labels(settings);
    let mut runs = settings
        .par_iter()
        .zip(labels.par_iter())
        .map(|(s, label)| run_variant(inst, s, label))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        for run in &mut runs {
            write_run_files(dir, run)?;
        }
        write_file(dir, "convergence.csv", &merged_convergence_csv(&runs))?;
    }
    let report = ExperimentReport::new(inst, runs.iter().map(|r| r.report.clone()).collect());
    if let Some(dir) = out_dir {
        write_summary(dir, &report)?;
    }
    Ok((report, runs))
}

/// Variant names, suffixed `-2`, `-3`, ... on repeats.
fn unique_labels(settings: &[RunSettings]) -> Vec<String> {
    let mut labels = Vec::with_capacity(settings.len());
    for (i, s) in settings.iter().enumerate() {
        let name = s.variant.name();
        let seen = settings[..i].iter().filter(|p| p.variant == s.variant).count();
        labels.push(if seen == 0 { name.to_string() } else { format!("{name}-{}", seen + 1) });
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn triangle() -> WeightedGraph {
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

    #[test]
    fn verify_triangle() {
        let r = verify(&triangle(), DEFAULT_MAX_QUBITS).unwrap();
        assert_eq!((r.n_qubits, r.penalty, r.kruskal_cost, r.e_min), (5, 7.0, 3.0, 3.0));
        assert_eq!(r.ground_state_count, 1);
        assert!(r.matches);
    }

    #[test]
    fn verify_respects_qubit_cap() {
        assert!(matches!(verify(&triangle(), 4), Err(ExperimentError::Sim(SimError::TooManyQubits { .. }))));
    }

    #[test]
    fn rescaled_settings_fit_the_horizon() {
        let mut s = RunSettings::new(Variant::TrMultiDrive);
        s.layers = 100;
        let cfg = s.protocol_config().unwrap();
        assert_eq!(cfg.num_layers, 50);
        s.tr_tf = Some(2.0 * 100.0 * s.dt);
        assert_eq!(s.protocol_config().unwrap().num_layers, 100);
        s.layers = 0;
        assert!(s.protocol_config().is_err());
    }

    #[test]
    fn labels_are_unique() {
        let s = [Variant::OneDrive, Variant::MultiDrive, Variant::OneDrive].map(RunSettings::new);
        assert_eq!(unique_labels(&s), ["one-drive", "multi-drive", "one-drive-2"]);
    }

    #[test]
    fn compare_needs_two_variants() {
        let inst = Instance::new(triangle()).unwrap();
        assert!(compare(&inst, &[RunSettings::new(Variant::OneDrive)], None).is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 12345.678901234567, 1e-300] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}

//! Minimum spanning tree as a QUBO Hamiltonian, solved by feedback-based
//! quantum protocols on an exact statevector simulator.
//!
//! * [`graph`]: weighted graphs, seeded generation, Kruskal reference
//! * [`qubo`]: variable registry, MST Hamiltonian, decoding
//! * [`sim`]: diagonal Hamiltonians, drivers, state evolution
//! * [`protocol`]: one-drive, multi-drive and time-rescaled feedback loops
//! * [`experiment`]: verification, runs, comparisons and their reports

pub mod experiment;
pub mod graph;
pub mod protocol;
pub mod qubo;
pub mod sim;

pub use graph::{generate_random_graph, is_spanning_tree, kruskal_mst, EdgeSet, GeneratorParams, WeightedGraph};
pub use protocol::{run_protocol, ControlShape, ProtocolConfig, RunTrace, Variant};
pub use qubo::{build_mst_qubo, decode, QuboModel, VariableRegistry};
pub use sim::{diagonalize_qubo, DiagonalHamiltonian, DriverSet, DriverTerm, StateVector};

//! Post-selected photonic gates as colored weighted graphs.
//!
//! A graph's perfect matchings superpose into a multi-photon state. Gates
//! are checked by comparing that state against the gate's Choi state, and
//! new gate graphs are found by fitting edge weights and pruning edges.

pub mod blueprint;
pub mod catalog;
pub mod discovery;
pub mod evaluator;
pub mod gates;
pub mod graph;
pub mod ket;
pub mod matchings;
pub mod objective;

pub use discovery::{discover, optimize_weights, prune_topology, seed_topology, DiscoveryError, DiscoveryResult, OptimizerConfig};
pub use evaluator::Evaluator;
pub use gates::{apply_gate, build_target, compose_specs, GateError, GateSpec, TargetLayout, TargetState};
pub use graph::{canonicalize_edge, graph_from_json, graph_to_json, validate_graph, Edge, Graph, GraphError, JsonError, Mode, Vertex, VertexRole};
pub use ket::Ket;
pub use matchings::{enumerate_pms, graph_state, oracle_state, state_gradient, PerfectMatching};
pub use objective::{count_rate, fidelity, loss, loss_gradient, verify_gate, LossKind, ObjectiveError, VerificationReport};

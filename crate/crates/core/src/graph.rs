//! Colored, complex-weighted experiment graphs.
//!
//! Vertices are photon paths. An edge joins two paths and carries one mode
//! (color) per endpoint plus a complex weight: either a photon pair emitted
//! into both paths, or a single photon moving from an incoming path to an
//! outgoing one. Every perfect matching of the graph is one joint detection
//! pattern.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Photonic mode index on a path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mode(pub u8);

impl Mode {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u8> for Mode {
    fn from(value: u8) -> Self {
        Mode(value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexRole {
    /// Incoming photon, paired with the output of the same position.
    Input { position: usize },
    Output { position: usize },
    /// Heralding detector that must register `fixed_mode`.
    Ancilla { fixed_mode: Mode },
}

impl VertexRole {
    pub fn name(&self) -> &'static str {
        match self {
            VertexRole::Input { .. } => "input",
            VertexRole::Output { .. } => "output",
            VertexRole::Ancilla { .. } => "ancilla",
        }
    }

    pub fn is_ancilla(&self) -> bool {
        matches!(self, VertexRole::Ancilla { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub id: usize,
    pub role: VertexRole,
    pub dim: u8,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub mode_a: Mode,
    pub mode_b: Mode,
    pub weight: Complex64,
}

/// Identity of a colored edge, independent of its weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub a: usize,
    pub b: usize,
    pub mode_a: Mode,
    pub mode_b: Mode,
}

impl Edge {
    pub fn key(&self) -> EdgeKey {
        EdgeKey { a: self.a, b: self.b, mode_a: self.mode_a, mode_b: self.mode_b }
    }

    /// Mode this edge assigns to vertex `v`, if `v` is an endpoint.
    pub fn mode_at(&self, v: usize) -> Option<Mode> {
        if v == self.a {
            Some(self.mode_a)
        } else if v == self.b {
            Some(self.mode_b)
        } else {
            None
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {0} does not exist")]
    UnknownVertex(usize),
    #[error("duplicate edge ({a}, {b}, {mode_a}, {mode_b})", a = .0.a, b = .0.b, mode_a = .0.mode_a, mode_b = .0.mode_b)]
    DuplicateEdge(EdgeKey),
    #[error("edge index {0} out of range")]
    EdgeIndex(usize),
    #[error("invalid graph: {0}")]
    Invalid(ValidationReport),
}

/// Orders the endpoints of an edge ascending, carrying the modes along.
pub fn canonicalize_edge(
    a: usize,
    b: usize,
    mode_a: Mode,
    mode_b: Mode,
    weight: Complex64,
) -> Result<Edge, GraphError> {
    if a == b {
        return Err(GraphError::SelfLoop(a));
    }
    Ok(if a < b {
        Edge { a, b, mode_a, mode_b, weight }
    } else {
        Edge { a: b, b: a, mode_a: mode_b, mode_b: mode_a, weight }
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Graph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    /// Free-form metadata carried through serialization.
    pub meta: BTreeMap<String, Value>,
}

impl Graph {
    pub fn new(vertices: Vec<Vertex>) -> Self {
        Graph { vertices, edges: Vec::new(), meta: BTreeMap::new() }
    }

    /// Builds the vertex roster `inputs, outputs, ancillas` with ids in that order.
    pub fn with_layout(io_dims: &[u8], ancilla_modes: &[Mode], ancilla_dim: u8) -> Self {
        let k = io_dims.len();
        let mut vertices = Vec::with_capacity(2 * k + ancilla_modes.len());
        for (position, &dim) in io_dims.iter().enumerate() {
            vertices.push(Vertex { id: position, role: VertexRole::Input { position }, dim });
        }
        for (position, &dim) in io_dims.iter().enumerate() {
            vertices.push(Vertex { id: k + position, role: VertexRole::Output { position }, dim });
        }
        for (j, &fixed_mode) in ancilla_modes.iter().enumerate() {
            let dim = ancilla_dim.max(fixed_mode.0 + 1);
            vertices.push(Vertex { id: 2 * k + j, role: VertexRole::Ancilla { fixed_mode }, dim });
        }
        Graph::new(vertices)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn dims(&self) -> Vec<u8> {
        self.vertices.iter().map(|v| v.dim).collect()
    }

    pub fn weights(&self) -> Vec<Complex64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn set_weights(&mut self, weights: &[Complex64]) {
        assert_eq!(weights.len(), self.edges.len(), "weight vector length");
        for (e, &w) in self.edges.iter_mut().zip(weights) {
            e.weight = w;
        }
    }

    /// Adds a canonicalized edge. Rejects self-loops, unknown endpoints and
    /// duplicate colored keys.
    pub fn add_edge(
        &mut self,
        a: usize,
        b: usize,
        mode_a: impl Into<Mode>,
        mode_b: impl Into<Mode>,
        weight: Complex64,
    ) -> Result<usize, GraphError> {
        let edge = canonicalize_edge(a, b, mode_a.into(), mode_b.into(), weight)?;
        if edge.b >= self.vertices.len() {
            return Err(GraphError::UnknownVertex(edge.b));
        }
        let key = edge.key();
        if self.edges.iter().any(|e| e.key() == key) {
            return Err(GraphError::DuplicateEdge(key));
        }
        self.edges.push(edge);
        Ok(self.edges.len() - 1)
    }

    pub fn remove_edge(&mut self, index: usize) -> Result<Edge, GraphError> {
        if index >= self.edges.len() {
            return Err(GraphError::EdgeIndex(index));
        }
        Ok(self.edges.remove(index))
    }

    /// Vertex ids of inputs, ordered by position.
    pub fn inputs(&self) -> Vec<usize> {
        self.by_position(|r| match r {
            VertexRole::Input { position } => Some(position),
            _ => None,
        })
    }

    /// Vertex ids of outputs, ordered by position.
    pub fn outputs(&self) -> Vec<usize> {
        self.by_position(|r| match r {
            VertexRole::Output { position } => Some(position),
            _ => None,
        })
    }

    /// Ancilla vertex ids with their heralding modes, in id order.
    pub fn ancillas(&self) -> Vec<(usize, Mode)> {
        self.vertices
            .iter()
            .filter_map(|v| match v.role {
                VertexRole::Ancilla { fixed_mode } => Some((v.id, fixed_mode)),
                _ => None,
            })
            .collect()
    }

    fn by_position(&self, pick: impl Fn(VertexRole) -> Option<usize>) -> Vec<usize> {
        let mut found: Vec<(usize, usize)> =
            self.vertices.iter().filter_map(|v| pick(v.role).map(|p| (p, v.id))).collect();
        found.sort_unstable();
        found.into_iter().map(|(_, id)| id).collect()
    }

    /// Number of edges incident to each vertex.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            if e.a < deg.len() {
                deg[e.a] += 1;
            }
            if e.b < deg.len() {
                deg[e.b] += 1;
            }
        }
        deg
    }

    pub fn validate(&self) -> ValidationReport {
        validate_graph(self)
    }

    /// Returns `self` if valid, otherwise the full report as an error.
    /// Warnings do not fail.
    pub fn checked(&self) -> Result<&Self, GraphError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(GraphError::Invalid(report))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    IdGap { index: usize, id: usize },
    DimTooSmall { vertex: usize, dim: u8 },
    AncillaModeOutOfRange { vertex: usize, mode: Mode, dim: u8 },
    PositionsNotContiguous { role: &'static str },
    UnpairedPosition { position: usize },
    PairDimMismatch { position: usize, input_dim: u8, output_dim: u8 },
    UnknownEndpoint { edge: usize, vertex: usize },
    SelfLoop { edge: usize },
    NotCanonical { edge: usize },
    ModeOutOfRange { edge: usize, vertex: usize, mode: Mode, dim: u8 },
    DuplicateKey { first: usize, second: usize },
    NonFiniteWeight { edge: usize },
    OddVertexCount { count: usize },
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::OddVertexCount { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IdGap { index, id } => write!(f, "vertex at index {index} has id {id}"),
            Violation::DimTooSmall { vertex, dim } => {
                write!(f, "vertex {vertex} has dimension {dim} (< 2)")
            }
            Violation::AncillaModeOutOfRange { vertex, mode, dim } => {
                write!(f, "ancilla {vertex} heralds mode {mode} but has dimension {dim}")
            }
            Violation::PositionsNotContiguous { role } => {
                write!(f, "{role} positions are not a contiguous 0-based range")
            }
            Violation::UnpairedPosition { position } => {
                write!(f, "position {position} lacks a matching input/output")
            }
            Violation::PairDimMismatch { position, input_dim, output_dim } => write!(
                f,
                "position {position}: input dimension {input_dim} differs from output dimension {output_dim}"
            ),
            Violation::UnknownEndpoint { edge, vertex } => {
                write!(f, "edge {edge} references unknown vertex {vertex}")
            }
            Violation::SelfLoop { edge } => write!(f, "edge {edge} is a self-loop"),
            Violation::NotCanonical { edge } => write!(f, "edge {edge} has a > b"),
            Violation::ModeOutOfRange { edge, vertex, mode, dim } => {
                write!(f, "edge {edge}: mode {mode} on vertex {vertex} exceeds dimension {dim}")
            }
            Violation::DuplicateKey { first, second } => {
                write!(f, "edges {first} and {second} share the same colored key")
            }
            Violation::NonFiniteWeight { edge } => write!(f, "edge {edge} has a non-finite weight"),
            Violation::OddVertexCount { count } => {
                write!(f, "odd vertex count {count}: no perfect matching exists")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// True when no error-level violation is present.
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity() == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity() == Severity::Warning)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Reports every violated structural invariant. Never fails.
pub fn validate_graph(g: &Graph) -> ValidationReport {
    let mut violations = Vec::new();
    let n = g.vertices.len();

    for (index, v) in g.vertices.iter().enumerate() {
        if v.id != index {
            violations.push(Violation::IdGap { index, id: v.id });
        }
        if v.dim < 2 {
            violations.push(Violation::DimTooSmall { vertex: index, dim: v.dim });
        }
        if let VertexRole::Ancilla { fixed_mode } = v.role {
            if fixed_mode.0 >= v.dim {
                violations.push(Violation::AncillaModeOutOfRange {
                    vertex: index,
                    mode: fixed_mode,
                    dim: v.dim,
                });
            }
        }
    }

    let mut inputs: BTreeMap<usize, Vec<u8>> = BTreeMap::new();
    let mut outputs: BTreeMap<usize, Vec<u8>> = BTreeMap::new();
    for v in &g.vertices {
        match v.role {
            VertexRole::Input { position } => inputs.entry(position).or_default().push(v.dim),
            VertexRole::Output { position } => outputs.entry(position).or_default().push(v.dim),
            VertexRole::Ancilla { .. } => {}
        }
    }
    for (role, positions) in [("input", &inputs), ("output", &outputs)] {
        let contiguous = positions.iter().enumerate().all(|(i, (&p, ids))| p == i && ids.len() == 1);
        if !contiguous {
            violations.push(Violation::PositionsNotContiguous { role });
        }
    }
    let all_positions: std::collections::BTreeSet<usize> =
        inputs.keys().chain(outputs.keys()).copied().collect();
    for position in all_positions {
        match (inputs.get(&position), outputs.get(&position)) {
            (Some(i), Some(o)) => {
                if i[0] != o[0] {
                    violations.push(Violation::PairDimMismatch {
                        position,
                        input_dim: i[0],
                        output_dim: o[0],
                    });
                }
            }
            _ => violations.push(Violation::UnpairedPosition { position }),
        }
    }

    let mut seen: BTreeMap<EdgeKey, usize> = BTreeMap::new();
    for (index, e) in g.edges.iter().enumerate() {
        let mut endpoints_ok = true;
        for vertex in [e.a, e.b] {
            if vertex >= n {
                violations.push(Violation::UnknownEndpoint { edge: index, vertex });
                endpoints_ok = false;
            }
        }
        if e.a == e.b {
            violations.push(Violation::SelfLoop { edge: index });
        } else if e.a > e.b {
            violations.push(Violation::NotCanonical { edge: index });
        }
        if endpoints_ok {
            for (vertex, mode) in [(e.a, e.mode_a), (e.b, e.mode_b)] {
                let dim = g.vertices[vertex].dim;
                if mode.0 >= dim {
                    violations.push(Violation::ModeOutOfRange { edge: index, vertex, mode, dim });
                }
            }
        }
        if !(e.weight.re.is_finite() && e.weight.im.is_finite()) {
            violations.push(Violation::NonFiniteWeight { edge: index });
        }
        // Compare orientation-independent keys so a non-canonical duplicate is still caught.
        let key = if e.a <= e.b {
            e.key()
        } else {
            EdgeKey { a: e.b, b: e.a, mode_a: e.mode_b, mode_b: e.mode_a }
        };
        if let Some(&first) = seen.get(&key) {
            violations.push(Violation::DuplicateKey { first, second: index });
        } else {
            seen.insert(key, index);
        }
    }

    if n % 2 == 1 {
        violations.push(Violation::OddVertexCount { count: n });
    }

    ValidationReport { violations }
}

/// Vertex pairs (ascending) that carry at least one edge.
pub fn connected_pairs(g: &Graph) -> HashSet<(usize, usize)> {
    g.edges.iter().map(|e| (e.a, e.b)).collect()
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Parse(serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invariant violation: {0}")]
    Invariant(ValidationReport),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    id: usize,
    role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixed_mode: Option<u8>,
    dim: u8,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    a: usize,
    b: usize,
    mode_a: u8,
    mode_b: u8,
    weight: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    vertices: Vec<VertexDoc>,
    edges: Vec<EdgeDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, Value>,
}

impl From<&Graph> for GraphDoc {
    fn from(g: &Graph) -> Self {
        let vertices = g
            .vertices
            .iter()
            .map(|v| {
                let (position, fixed_mode) = match v.role {
                    VertexRole::Input { position } | VertexRole::Output { position } => {
                        (Some(position), None)
                    }
                    VertexRole::Ancilla { fixed_mode } => (None, Some(fixed_mode.0)),
                };
                VertexDoc { id: v.id, role: v.role.name().to_string(), position, fixed_mode, dim: v.dim }
            })
            .collect();
        let edges = g
            .edges
            .iter()
            .map(|e| EdgeDoc {
                a: e.a,
                b: e.b,
                mode_a: e.mode_a.0,
                mode_b: e.mode_b.0,
                weight: [e.weight.re, e.weight.im],
            })
            .collect();
        GraphDoc { vertices, edges, meta: g.meta.clone() }
    }
}

impl TryFrom<GraphDoc> for Graph {
    type Error = JsonError;

    fn try_from(doc: GraphDoc) -> Result<Self, JsonError> {
        let mut vertices = Vec::with_capacity(doc.vertices.len());
        for v in doc.vertices {
            let role = match (v.role.as_str(), v.position, v.fixed_mode) {
                ("input", Some(position), None) => VertexRole::Input { position },
                ("output", Some(position), None) => VertexRole::Output { position },
                ("ancilla", None, fixed_mode) => {
                    VertexRole::Ancilla { fixed_mode: Mode(fixed_mode.unwrap_or(0)) }
                }
                ("input" | "output", None, _) => {
                    return Err(JsonError::Schema(format!("vertex {}: missing position", v.id)))
                }
                ("input" | "output", _, Some(_)) => {
                    return Err(JsonError::Schema(format!(
                        "vertex {}: fixed_mode only applies to ancillas",
                        v.id
                    )))
                }
                ("ancilla", Some(_), _) => {
                    return Err(JsonError::Schema(format!(
                        "vertex {}: ancillas have no position",
                        v.id
                    )))
                }
                (other, _, _) => {
                    return Err(JsonError::Schema(format!(
                        "vertex {}: unknown role {other:?}",
                        v.id
                    )))
                }
            };
            vertices.push(Vertex { id: v.id, role, dim: v.dim });
        }
        let edges = doc
            .edges
            .into_iter()
            .map(|e| Edge {
                a: e.a,
                b: e.b,
                mode_a: Mode(e.mode_a),
                mode_b: Mode(e.mode_b),
                weight: Complex64::new(e.weight[0], e.weight[1]),
            })
            .collect();
        Ok(Graph { vertices, edges, meta: doc.meta })
    }
}

pub fn graph_to_value(g: &Graph) -> Value {
    serde_json::to_value(GraphDoc::from(g)).expect("graph documents always serialize")
}

pub fn graph_to_json(g: &Graph) -> String {
    serde_json::to_string_pretty(&GraphDoc::from(g)).expect("graph documents always serialize")
}

/// Parses a graph from an already-decoded JSON value.
pub fn graph_from_value(value: Value) -> Result<Graph, JsonError> {
    let doc: GraphDoc =
        serde_json::from_value(value).map_err(|e| JsonError::Schema(e.to_string()))?;
    let g = Graph::try_from(doc)?;
    let report = g.validate();
    if !report.is_valid() {
        return Err(JsonError::Invariant(report));
    }
    Ok(g)
}

pub fn graph_from_json(text: &str) -> Result<Graph, JsonError> {
    let value: Value = serde_json::from_str(text).map_err(JsonError::Parse)?;
    graph_from_value(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair_graph() -> Graph {
        Graph::new(vec![
            Vertex { id: 0, role: VertexRole::Ancilla { fixed_mode: Mode(0) }, dim: 2 },
            Vertex { id: 1, role: VertexRole::Ancilla { fixed_mode: Mode(0) }, dim: 2 },
        ])
    }

    #[test]
    fn canonicalize_swaps_endpoints_and_modes() {
        let e = canonicalize_edge(3, 1, Mode(0), Mode(1), c(1.0, 0.0)).unwrap();
        assert_eq!((e.a, e.b, e.mode_a, e.mode_b), (1, 3, Mode(1), Mode(0)));
        assert_eq!(e.weight, c(1.0, 0.0));

        let e = canonicalize_edge(1, 3, Mode(0), Mode(1), c(0.0, 0.5)).unwrap();
        assert_eq!((e.a, e.b, e.mode_a, e.mode_b), (1, 3, Mode(0), Mode(1)));
        assert_eq!(e.weight, c(0.0, 0.5));

        assert_eq!(
            canonicalize_edge(2, 2, Mode(0), Mode(0), c(1.0, 0.0)),
            Err(GraphError::SelfLoop(2))
        );
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let e = canonicalize_edge(5, 2, Mode(1), Mode(2), c(0.3, -0.1)).unwrap();
        let again = canonicalize_edge(e.a, e.b, e.mode_a, e.mode_b, e.weight).unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn two_vertex_graph_is_valid() {
        let mut g = pair_graph();
        g.add_edge(0, 1, 0, 0, c(1.0, 0.0)).unwrap();
        assert!(g.validate().is_clean());
    }

    #[test]
    fn duplicate_edge_is_reported() {
        let mut g = pair_graph();
        g.add_edge(0, 1, 0, 0, c(1.0, 0.0)).unwrap();
        assert!(matches!(g.add_edge(1, 0, 0, 0, c(2.0, 0.0)), Err(GraphError::DuplicateEdge(_))));
        g.edges.push(g.edges[0]);
        let report = g.validate();
        assert_eq!(report.violations, vec![Violation::DuplicateKey { first: 0, second: 1 }]);
        assert!(!report.is_valid());
    }

    #[test]
    fn odd_vertex_count_is_a_warning() {
        let mut g = pair_graph();
        g.vertices.push(Vertex { id: 2, role: VertexRole::Ancilla { fixed_mode: Mode(0) }, dim: 2 });
        let report = g.validate();
        assert!(report.is_valid());
        assert_eq!(report.warnings().count(), 1);
        assert_eq!(report.violations, vec![Violation::OddVertexCount { count: 3 }]);
    }

    #[test]
    fn structural_problems_are_all_reported() {
        let mut g = Graph::with_layout(&[2, 3], &[], 2);
        // output 1 gets the wrong dimension, id gap on vertex 2
        g.vertices[3].dim = 2;
        g.vertices[2].id = 7;
        g.edges.push(Edge { a: 1, b: 0, mode_a: Mode(2), mode_b: Mode(5), weight: c(f64::NAN, 0.0) });
        g.edges.push(Edge { a: 0, b: 9, mode_a: Mode(0), mode_b: Mode(0), weight: c(1.0, 0.0) });
        let report = g.validate();
        let has = |pred: fn(&Violation) -> bool| report.violations.iter().any(pred);
        assert!(has(|v| matches!(v, Violation::IdGap { index: 2, id: 7 })));
        assert!(has(|v| matches!(v, Violation::PairDimMismatch { position: 1, .. })));
        assert!(has(|v| matches!(v, Violation::NotCanonical { edge: 0 })));
        assert!(has(|v| matches!(v, Violation::ModeOutOfRange { edge: 0, vertex: 0, .. })));
        assert!(has(|v| matches!(v, Violation::NonFiniteWeight { edge: 0 })));
        assert!(has(|v| matches!(v, Violation::UnknownEndpoint { edge: 1, vertex: 9 })));
    }

    #[test]
    fn layout_orders_roles() {
        let g = Graph::with_layout(&[2, 3], &[Mode(0), Mode(1)], 2);
        assert_eq!(g.inputs(), vec![0, 1]);
        assert_eq!(g.outputs(), vec![2, 3]);
        assert_eq!(g.ancillas(), vec![(4, Mode(0)), (5, Mode(1))]);
        assert_eq!(g.dims(), vec![2, 3, 2, 3, 2, 2]);
        assert!(g.validate().is_clean());
    }

    #[test]
    fn json_round_trip_keeps_edge_order() {
        let mut g = Graph::with_layout(&[2], &[Mode(0), Mode(0)], 2);
        g.add_edge(2, 0, 0, 1, c(0.5, -0.25)).unwrap();
        g.add_edge(1, 3, 1, 0, c(-1.0, 1e-300)).unwrap();
        g.add_edge(0, 1, 0, 0, c(0.1, 0.2)).unwrap();
        g.meta.insert("names".into(), serde_json::json!(["in", "out", "d1", "d2"]));
        let text = graph_to_json(&g);
        assert_eq!(graph_from_json(&text).unwrap(), g);
    }

    #[test]
    fn scalar_weight_is_a_schema_error() {
        let text = r#"{"vertices":[{"id":0,"role":"ancilla","fixed_mode":0,"dim":2},
                                   {"id":1,"role":"ancilla","fixed_mode":0,"dim":2}],
                       "edges":[{"a":0,"b":1,"mode_a":0,"mode_b":0,"weight":1}]}"#;
        assert!(matches!(graph_from_json(text), Err(JsonError::Schema(_))));
    }

    #[test]
    fn unknown_keys() {
        let top = r#"{"vertices":[],"edges":[],"extra":1}"#;
        assert!(graph_from_json(top).is_ok());
        let inner = r#"{"vertices":[{"id":0,"role":"input","position":0,"dim":2,"x":1}],"edges":[]}"#;
        assert!(matches!(graph_from_json(inner), Err(JsonError::Schema(_))));
    }

    #[test]
    fn mode_out_of_range_is_an_invariant_error() {
        let text = r#"{"vertices":[{"id":0,"role":"ancilla","fixed_mode":0,"dim":2},
                                   {"id":1,"role":"ancilla","fixed_mode":0,"dim":2}],
                       "edges":[{"a":0,"b":1,"mode_a":2,"mode_b":0,"weight":[1.0,0.0]}]}"#;
        assert!(matches!(graph_from_json(text), Err(JsonError::Invariant(_))));
        assert!(matches!(graph_from_json("{\"vertices\": ["), Err(JsonError::Parse(_))));
    }
}

//! Experiment descriptions and DOT export for verified graphs.
//!
//! Each edge becomes one photon-pair source (or, for edges touching an
//! input, the transition of the incoming photon). Paths fed by several
//! sources are either overlapped (path identity) or recombined after the
//! fact (path-information erasure).

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::graph::{Graph, GraphError, VertexRole};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlueprintStyle {
    PathIdentity,
    PathErasure,
}

impl fmt::Display for BlueprintStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlueprintStyle::PathIdentity => "path-identity",
            BlueprintStyle::PathErasure => "path-erasure",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Source {
    pub id: usize,
    /// "pair" for a photon-pair source, "transition" when an input photon
    /// is routed into the other path.
    pub kind: &'static str,
    pub path_a: usize,
    pub path_b: usize,
    pub modes: [u8; 2],
    pub amplitude: f64,
    /// Degrees in [0, 360).
    pub phase: f64,
}

/// A path reached by more than one source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Junction {
    pub path: usize,
    pub sources: Vec<usize>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detector {
    pub path: usize,
    pub role: &'static str,
    /// Mode that must click for the gate to be heralded; outputs carry none.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub herald_mode: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlueprintDoc {
    pub style: BlueprintStyle,
    pub sources: Vec<Source>,
    pub junctions: Vec<Junction>,
    pub detectors: Vec<Detector>,
}

fn phase_degrees(re: f64, im: f64) -> f64 {
    let deg = im.atan2(re).to_degrees();
    let deg = if deg < 0.0 { deg + 360.0 } else { deg };
    // -0.0 and values that round up to 360
    if deg >= 360.0 || deg == 0.0 {
        0.0
    } else {
        deg
    }
}

pub fn graph_to_blueprint(g: &Graph, style: BlueprintStyle) -> Result<BlueprintDoc, GraphError> {
    g.checked()?;
    let is_input = |v: usize| matches!(g.vertices[v].role, VertexRole::Input { .. });
    let sources: Vec<Source> = g
        .edges
        .iter()
        .enumerate()
        .map(|(id, e)| Source {
            id,
            kind: if is_input(e.a) || is_input(e.b) { "transition" } else { "pair" },
            path_a: e.a,
            path_b: e.b,
            modes: [e.mode_a.0, e.mode_b.0],
            amplitude: e.weight.norm(),
            phase: phase_degrees(e.weight.re, e.weight.im),
        })
        .collect();

    let mut junctions = Vec::new();
    for v in &g.vertices {
        let feeding: Vec<usize> =
            g.edges.iter().enumerate().filter(|(_, e)| e.touches(v.id)).map(|(i, _)| i).collect();
        if feeding.len() < 2 {
            continue;
        }
        let list = feeding.iter().map(|s| format!("S{s}")).collect::<Vec<_>>().join(", ");
        let note = match style {
            BlueprintStyle::PathIdentity => {
                format!("overlap path {} of sources {list} so their origin is indistinguishable", v.id)
            }
            BlueprintStyle::PathErasure => format!(
                "keep sources {list} separate on path {}; erase which-source information at a combination stage before detection",
                v.id
            ),
        };
        junctions.push(Junction { path: v.id, sources: feeding, note });
    }

    let detectors = g
        .vertices
        .iter()
        .filter_map(|v| match v.role {
            VertexRole::Ancilla { fixed_mode } => {
                Some(Detector { path: v.id, role: "ancilla", herald_mode: Some(fixed_mode.0) })
            }
            VertexRole::Output { .. } => Some(Detector { path: v.id, role: "output", herald_mode: None }),
            VertexRole::Input { .. } => None,
        })
        .collect();

    Ok(BlueprintDoc { style, sources, junctions, detectors })
}

impl BlueprintDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("blueprints always serialize")
    }
}

impl fmt::Display for BlueprintDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# blueprint ({})", self.style)?;
        writeln!(f, "sources:")?;
        for s in &self.sources {
            writeln!(
                f,
                "  S{} {} paths {}-{} modes ({},{}) amplitude {:.6} phase {:.2} deg",
                s.id, s.kind, s.path_a, s.path_b, s.modes[0], s.modes[1], s.amplitude, s.phase
            )?;
        }
        let heading = match self.style {
            BlueprintStyle::PathIdentity => "overlaps:",
            BlueprintStyle::PathErasure => "erasure stages:",
        };
        writeln!(f, "{heading}")?;
        for j in &self.junctions {
            writeln!(f, "  path {}: {}", j.path, j.note)?;
        }
        writeln!(f, "detectors:")?;
        for d in &self.detectors {
            match d.herald_mode {
                Some(m) => writeln!(f, "  path {} ({}) heralds mode {m}", d.path, d.role)?,
                None => writeln!(f, "  path {} ({})", d.path, d.role)?,
            }
        }
        Ok(())
    }
}

const PALETTE: [&str; 8] = ["blue", "red", "green", "orange", "purple", "brown", "magenta", "cyan"];

fn palette(mode: u8) -> &'static str {
    PALETTE[mode as usize % PALETTE.len()]
}

/// Deterministic Graphviz document, edges in stored order.
pub fn export_dot(g: &Graph) -> String {
    let mut out = String::from("graph experiment {\n  node [shape=circle];\n");
    for v in &g.vertices {
        let _ = writeln!(out, "  v{} [label=\"{}/{}/{}\"];", v.id, v.id, v.role.name(), v.dim);
    }
    for (i, e) in g.edges.iter().enumerate() {
        let _ = writeln!(
            out,
            "  v{} -- v{} [id=\"e{i}\", mode_a={}, mode_b={}, color=\"{}:{}\", label=\"{:.4} / {:.1}\"];",
            e.a,
            e.b,
            e.mode_a,
            e.mode_b,
            palette(e.mode_a.0),
            palette(e.mode_b.0),
            e.weight.norm(),
            phase_degrees(e.weight.re, e.weight.im)
        );
    }
    out.push_str("}\n");
    out
}

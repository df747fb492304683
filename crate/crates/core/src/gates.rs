//! Basis-permutation gates and their Choi-state targets.
//!
//! A gate is a bijection on input basis tuples. Its target state is the
//! uniform superposition over all inputs `x` of `|x>_in |f(x)>_out`, tensored
//! with the heralding pattern of the ancillas.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::graph::{Graph, Mode, VertexRole};
use crate::ket::Ket;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("basis tuple {tuple:?} out of range for dimensions {dims:?}")]
    OutOfRange { tuple: Vec<u8>, dims: Vec<u8> },
    #[error("truth map of {0} is not a bijection")]
    NotBijective(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("cannot parse gate spec: bad token {token:?} ({reason})")]
    Parse { token: String, reason: String },
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateSpec {
    pub name: String,
    pub input_dims: Vec<u8>,
    pub output_dims: Vec<u8>,
    /// Output tuple for each input, indexed by the mixed-radix rank of the
    /// input tuple (first slot most significant).
    truth: Vec<Vec<u8>>,
    pub ancilla_modes: Vec<Mode>,
}

/// Mixed-radix rank of `tuple` (first slot most significant).
pub fn rank(tuple: &[u8], dims: &[u8]) -> usize {
    tuple.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d as usize + x as usize)
}

/// Inverse of [`rank`].
pub fn unrank(mut index: usize, dims: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; dims.len()];
    for (slot, &d) in dims.iter().enumerate().rev() {
        out[slot] = (index % d as usize) as u8;
        index /= d as usize;
    }
    out
}

/// Every basis tuple over `dims` in rank order.
pub fn basis(dims: &[u8]) -> impl Iterator<Item = Vec<u8>> + '_ {
    let total: usize = dims.iter().map(|&d| d as usize).product();
    (0..total).map(move |i| unrank(i, dims))
}

impl GateSpec {
    /// Builds a spec from an explicit map, checking it is a bijection.
    pub fn from_fn(
        name: impl Into<String>,
        dims: Vec<u8>,
        f: impl Fn(&[u8]) -> Vec<u8>,
    ) -> Result<Self, GateError> {
        let name = name.into();
        let truth: Vec<Vec<u8>> = basis(&dims).map(|x| f(&x)).collect();
        for y in &truth {
            if y.len() != dims.len() || y.iter().zip(&dims).any(|(v, d)| v >= d) {
                return Err(GateError::OutOfRange { tuple: y.clone(), dims: dims.clone() });
            }
        }
        let spec = GateSpec {
            name,
            output_dims: dims.clone(),
            input_dims: dims,
            truth,
            ancilla_modes: Vec::new(),
        };
        if !spec.is_bijection() {
            return Err(GateError::NotBijective(spec.name));
        }
        Ok(spec)
    }

    pub fn identity(dims: Vec<u8>) -> Self {
        GateSpec::from_fn("id", dims, |x| x.to_vec()).expect("identity is a bijection")
    }

    /// Identity channel on one photon; a teleporter realizes this.
    pub fn teleport(d: u8) -> Self {
        let mut s = GateSpec::identity(vec![d]);
        s.name = format!("teleport:{d}");
        s
    }

    /// Cyclic shift `|t> -> |t+1 mod d>`.
    pub fn x(d: u8) -> Self {
        GateSpec::from_fn(format!("x:{d}"), vec![d], |x| vec![(x[0] + 1) % d])
            .expect("shift is a bijection")
    }

    /// `|a, b> -> |b, a>`.
    pub fn swap(d: u8) -> Self {
        GateSpec::from_fn(format!("swap:{d}"), vec![d, d], |x| vec![x[1], x[0]])
            .expect("swap is a bijection")
    }

    /// `|c, t> -> |c, (t + c) mod d_t>`.
    pub fn cx(dc: u8, dt: u8) -> Self {
        GateSpec::from_fn(format!("cx:{dc},{dt}"), vec![dc, dt], |x| {
            vec![x[0], ((x[1] as u16 + x[0] as u16) % dt as u16) as u8]
        })
        .expect("modular addition is a bijection")
    }

    /// Two qubit controls; the target advances only when both are 1.
    pub fn ccx(dt: u8) -> Self {
        GateSpec::from_fn(format!("ccx:{dt}"), vec![2, 2, dt], |x| {
            let both = x[0] & x[1];
            vec![x[0], x[1], (x[2] + both) % dt]
        })
        .expect("controlled shift is a bijection")
    }

    /// Qubit Fredkin gate: swaps the targets when the control is 1.
    pub fn cswap() -> Self {
        GateSpec::from_fn("cswap", vec![2, 2, 2], |x| {
            if x[0] == 1 {
                vec![1, x[2], x[1]]
            } else {
                x.to_vec()
            }
        })
        .expect("controlled swap is a bijection")
    }

    pub fn arity(&self) -> usize {
        self.input_dims.len()
    }

    /// Number of basis inputs, `D`.
    pub fn basis_size(&self) -> usize {
        self.truth.len()
    }

    pub fn with_ancilla_modes(mut self, modes: Vec<Mode>) -> Self {
        self.ancilla_modes = modes;
        self
    }

    /// `count` ancillas heralded in mode 0.
    pub fn with_ancillas(self, count: usize) -> Self {
        self.with_ancilla_modes(vec![Mode(0); count])
    }

    pub fn apply(&self, x: &[u8]) -> Result<&[u8], GateError> {
        if x.len() != self.input_dims.len() || x.iter().zip(&self.input_dims).any(|(v, d)| v >= d) {
            return Err(GateError::OutOfRange { tuple: x.to_vec(), dims: self.input_dims.clone() });
        }
        Ok(&self.truth[rank(x, &self.input_dims)])
    }

    /// (input, output) pairs in input rank order.
    pub fn table(&self) -> impl Iterator<Item = (Vec<u8>, &[u8])> + '_ {
        basis(&self.input_dims).zip(self.truth.iter().map(|y| y.as_slice()))
    }

    pub fn is_bijection(&self) -> bool {
        let mut hit = vec![false; self.truth.len()];
        for y in &self.truth {
            let r = rank(y, &self.output_dims);
            if r >= hit.len() || hit[r] {
                return false;
            }
            hit[r] = true;
        }
        true
    }
}

/// Image of basis tuple `x` under `spec`.
pub fn apply_gate(spec: &GateSpec, x: &[u8]) -> Result<Vec<u8>, GateError> {
    spec.apply(x).map(|y| y.to_vec())
}

/// `second ∘ first`.
pub fn compose_specs(first: &GateSpec, second: &GateSpec) -> Result<GateSpec, GateError> {
    if first.output_dims != second.input_dims {
        return Err(GateError::DimMismatch(format!(
            "{} outputs {:?} but {} takes {:?}",
            first.name, first.output_dims, second.name, second.input_dims
        )));
    }
    let name = format!("{}*{}", second.name, first.name);
    GateSpec::from_fn(name, first.input_dims.clone(), |x| {
        let mid = first.apply(x).expect("basis tuple in range");
        second.apply(mid).expect("composed dims agree").to_vec()
    })
}

/// Runs two gates side by side on disjoint photons.
pub fn tensor_specs(left: &GateSpec, right: &GateSpec) -> GateSpec {
    let k = left.arity();
    let dims: Vec<u8> = left.input_dims.iter().chain(&right.input_dims).copied().collect();
    let mut spec = GateSpec::from_fn(format!("{}|{}", left.name, right.name), dims, |x| {
        let mut y = left.apply(&x[..k]).expect("in range").to_vec();
        y.extend_from_slice(right.apply(&x[k..]).expect("in range"));
        y
    })
    .expect("tensor of bijections is a bijection");
    spec.ancilla_modes = left.ancilla_modes.iter().chain(&right.ancilla_modes).copied().collect();
    spec
}

/// Re-routes outputs: new output slot `j` carries old output slot `perm[j]`.
pub fn rewire_outputs(spec: &GateSpec, perm: &[usize]) -> Result<GateSpec, GateError> {
    let k = spec.arity();
    let mut seen = vec![false; k];
    if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
        return Err(GateError::DimMismatch(format!("{perm:?} is not a permutation of {k} slots")));
    }
    let new_out: Vec<u8> = perm.iter().map(|&p| spec.output_dims[p]).collect();
    if new_out != spec.input_dims {
        return Err(GateError::DimMismatch(format!(
            "rewired outputs {:?} differ from inputs {:?}",
            new_out, spec.input_dims
        )));
    }
    let mut out = GateSpec::from_fn(format!("{}~{perm:?}", spec.name), spec.input_dims.clone(), |x| {
        let y = spec.apply(x).expect("in range");
        perm.iter().map(|&p| y[p]).collect()
    })?;
    out.ancilla_modes = spec.ancilla_modes.clone();
    Ok(out)
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

fn parse_dim(token: &str) -> Result<u8, GateError> {
    let bad = |reason: &str| GateError::Parse { token: token.to_string(), reason: reason.into() };
    let d: u8 = token.trim().parse().map_err(|_| bad("expected a dimension"))?;
    if !(2..=16).contains(&d) {
        return Err(bad("dimension must be between 2 and 16"));
    }
    Ok(d)
}

impl FromStr for GateSpec {
    type Err = GateError;

    /// Accepts `swap[:d]`, `teleport[:d]`, `x[:d]`, `cx[:dc,dt]`, `ccx[:dt]`, `cswap`.
    fn from_str(s: &str) -> Result<Self, GateError> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let dims: Vec<u8> = match args {
            Some(a) => a.split(',').map(parse_dim).collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        let arity_error = |expected: &str| GateError::Parse {
            token: args.unwrap_or("").to_string(),
            reason: format!("{name} takes {expected}"),
        };
        match name.to_ascii_lowercase().as_str() {
            "swap" => match dims[..] {
                [] => Ok(GateSpec::swap(2)),
                [d] => Ok(GateSpec::swap(d)),
                _ => Err(arity_error("one dimension")),
            },
            "teleport" | "id" => match dims[..] {
                [] => Ok(GateSpec::teleport(2)),
                [d] => Ok(GateSpec::teleport(d)),
                _ => Err(arity_error("one dimension")),
            },
            "x" => match dims[..] {
                [] => Ok(GateSpec::x(2)),
                [d] => Ok(GateSpec::x(d)),
                _ => Err(arity_error("one dimension")),
            },
            "cx" | "cnot" => match dims[..] {
                [] => Ok(GateSpec::cx(2, 2)),
                [dt] => Ok(GateSpec::cx(2, dt)),
                [dc, dt] => Ok(GateSpec::cx(dc, dt)),
                _ => Err(arity_error("control and target dimensions")),
            },
            "ccx" | "toffoli" => match dims[..] {
                [] => Ok(GateSpec::ccx(2)),
                [dt] => Ok(GateSpec::ccx(dt)),
                _ => Err(arity_error("one target dimension")),
            },
            "cswap" | "fredkin" => match dims[..] {
                [] | [2] => Ok(GateSpec::cswap()),
                _ => Err(arity_error("no dimensions (qubits only)")),
            },
            _ => Err(GateError::Parse { token: name.to_string(), reason: "unknown gate".into() }),
        }
    }
}

/// Which vertex holds each slot of the Choi target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetLayout {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub ancillas: Vec<usize>,
    /// Dimension of every vertex, indexed by id.
    pub dims: Vec<u8>,
}

impl TargetLayout {
    /// Reads the slot assignment from vertex roles.
    pub fn from_graph(g: &Graph) -> Self {
        TargetLayout {
            inputs: g.inputs(),
            outputs: g.outputs(),
            ancillas: g.ancillas().into_iter().map(|(id, _)| id).collect(),
            dims: g.dims(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.dims.len()
    }
}

/// Heralding modes of a graph's ancillas, in id order.
pub fn ancilla_modes_of(g: &Graph) -> Vec<Mode> {
    g.vertices
        .iter()
        .filter_map(|v| match v.role {
            VertexRole::Ancilla { fixed_mode } => Some(fixed_mode),
            _ => None,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    pub ket: Ket,
    pub layout: TargetLayout,
}

/// Normalized Choi state of `spec` laid out on the vertices of `layout`.
pub fn build_target(spec: &GateSpec, layout: &TargetLayout) -> Result<TargetState, GateError> {
    let k = spec.arity();
    if layout.inputs.len() != k || layout.outputs.len() != k {
        return Err(GateError::LayoutMismatch(format!(
            "{} acts on {k} photons, layout has {} inputs and {} outputs",
            spec.name,
            layout.inputs.len(),
            layout.outputs.len()
        )));
    }
    if layout.ancillas.len() != spec.ancilla_modes.len() {
        return Err(GateError::LayoutMismatch(format!(
            "{} ancilla modes for {} ancilla vertices",
            spec.ancilla_modes.len(),
            layout.ancillas.len()
        )));
    }
    let n = layout.vertex_count();
    let mut used = vec![false; n];
    for &v in layout.inputs.iter().chain(&layout.outputs).chain(&layout.ancillas) {
        if v >= n || std::mem::replace(&mut used[v], true) {
            return Err(GateError::LayoutMismatch(format!("vertex {v} missing or reused")));
        }
    }
    if used.iter().any(|u| !u) {
        return Err(GateError::LayoutMismatch("layout leaves vertices unassigned".into()));
    }
    for slot in 0..k {
        let (din, dout) = (layout.dims[layout.inputs[slot]], layout.dims[layout.outputs[slot]]);
        if din != spec.input_dims[slot] || dout != spec.output_dims[slot] {
            return Err(GateError::LayoutMismatch(format!(
                "slot {slot}: spec dimension {} vs vertex dimensions {din}/{dout}",
                spec.input_dims[slot]
            )));
        }
    }
    for (&v, &m) in layout.ancillas.iter().zip(&spec.ancilla_modes) {
        if m.0 >= layout.dims[v] {
            return Err(GateError::LayoutMismatch(format!("ancilla {v} cannot herald mode {m}")));
        }
    }

    let amp = Complex64::new(1.0 / (spec.basis_size() as f64).sqrt(), 0.0);
    let mut base = vec![0u8; n];
    for (&v, &m) in layout.ancillas.iter().zip(&spec.ancilla_modes) {
        base[v] = m.0;
    }
    let terms = spec.table().map(|(x, y)| {
        let mut assignment = base.clone();
        for slot in 0..k {
            assignment[layout.inputs[slot]] = x[slot];
            assignment[layout.outputs[slot]] = y[slot];
        }
        (assignment, amp)
    });
    Ok(TargetState { ket: Ket::from_terms(layout.dims.clone(), terms), layout: layout.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_truth_rows() {
        assert_eq!(apply_gate(&GateSpec::swap(2), &[1, 0]).unwrap(), vec![0, 1]);
        assert_eq!(apply_gate(&GateSpec::cx(2, 3), &[1, 2]).unwrap(), vec![1, 0]);
        let ccx = GateSpec::ccx(2);
        assert_eq!(apply_gate(&ccx, &[1, 1, 0]).unwrap(), vec![1, 1, 1]);
        assert_eq!(apply_gate(&ccx, &[1, 0, 1]).unwrap(), vec![1, 0, 1]);
        let cswap = GateSpec::cswap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(apply_gate(&cswap, &[0, a, b]).unwrap(), vec![0, a, b]);
            }
        }
    }

    #[test]
    fn out_of_range_input() {
        assert!(matches!(GateSpec::cx(2, 3).apply(&[2, 0]), Err(GateError::OutOfRange { .. })));
        assert!(matches!(GateSpec::cx(2, 3).apply(&[1]), Err(GateError::OutOfRange { .. })));
    }

    #[test]
    fn non_bijection_is_rejected() {
        let err = GateSpec::from_fn("erase", vec![2], |_| vec![0]).unwrap_err();
        assert_eq!(err, GateError::NotBijective("erase".into()));
    }

    #[test]
    fn rank_round_trip() {
        let dims = [2, 3, 4];
        for i in 0..24 {
            assert_eq!(rank(&unrank(i, &dims), &dims), i);
        }
    }

    #[test]
    fn compositions() {
        let id = GateSpec::identity(vec![2]);
        assert_eq!(compose_specs(&id, &id).unwrap().table().collect::<Vec<_>>(), id.table().collect::<Vec<_>>());
        let xx = compose_specs(&GateSpec::x(2), &GateSpec::x(2)).unwrap();
        assert!(xx.table().all(|(x, y)| x == y));
        let crossed = rewire_outputs(&tensor_specs(&GateSpec::teleport(2), &GateSpec::teleport(2)), &[1, 0]).unwrap();
        let swap = GateSpec::swap(2);
        assert!(crossed.table().zip(swap.table()).all(|(a, b)| a == b));
        assert!(matches!(compose_specs(&GateSpec::x(2), &GateSpec::x(3)), Err(GateError::DimMismatch(_))));
    }

    #[test]
    fn parse_specs() {
        assert_eq!("cx:2,3".parse::<GateSpec>().unwrap(), GateSpec::cx(2, 3));
        assert_eq!("ccx:3".parse::<GateSpec>().unwrap(), GateSpec::ccx(3));
        assert_eq!("cswap".parse::<GateSpec>().unwrap(), GateSpec::cswap());
        assert_eq!("swap:3".parse::<GateSpec>().unwrap(), GateSpec::swap(3));
        assert_eq!("teleport:2".parse::<GateSpec>().unwrap(), GateSpec::teleport(2));
        let err = "cx:2,q".parse::<GateSpec>().unwrap_err();
        assert!(matches!(err, GateError::Parse { ref token, .. } if token == "q"), "{err}");
        let err = "toff0li".parse::<GateSpec>().unwrap_err();
        assert!(matches!(err, GateError::Parse { ref token, .. } if token == "toff0li"));
        assert!("cx:2,3,4".parse::<GateSpec>().is_err());
    }

    #[test]
    fn cx_target_layout() {
        let g = Graph::with_layout(&[2, 2], &[Mode(0), Mode(0)], 2);
        let spec = GateSpec::cx(2, 2).with_ancillas(2);
        let t = build_target(&spec, &TargetLayout::from_graph(&g)).unwrap();
        assert_eq!(t.ket.len(), 4);
        for (c, tt) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
            let amp = t.ket.amplitude(&[c, tt, c, (tt + c) % 2, 0, 0]);
            assert!((amp.re - 0.5).abs() < 1e-15 && amp.im == 0.0);
        }
    }

    #[test]
    fn swap_target() {
        let g = Graph::with_layout(&[2, 2], &[], 2);
        let t = build_target(&GateSpec::swap(2), &TargetLayout::from_graph(&g)).unwrap();
        assert_eq!(t.ket.len(), 4);
        for a in 0..2u8 {
            for b in 0..2u8 {
                assert!((t.ket.amplitude(&[a, b, b, a]).re - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ccx_qutrit_target_has_twelve_terms() {
        let g = Graph::with_layout(&[2, 2, 3], &[Mode(0); 4], 2);
        let spec = GateSpec::ccx(3).with_ancillas(4);
        let t = build_target(&spec, &TargetLayout::from_graph(&g)).unwrap();
        assert_eq!(t.ket.len(), 12);
        assert!((t.ket.norm() - 1.0).abs() < 1e-15);
        let expected = 1.0 / 12f64.sqrt();
        assert!(t.ket.terms().all(|(_, a)| (a.re - expected).abs() < 1e-15));
    }

    #[test]
    fn layout_mismatches() {
        let g = Graph::with_layout(&[2, 2], &[Mode(0), Mode(0)], 2);
        let layout = TargetLayout::from_graph(&g);
        assert!(matches!(build_target(&GateSpec::ccx(2).with_ancillas(2), &layout), Err(GateError::LayoutMismatch(_))));
        assert!(matches!(build_target(&GateSpec::cx(2, 2), &layout), Err(GateError::LayoutMismatch(_))));
        assert!(matches!(build_target(&GateSpec::cx(2, 3).with_ancillas(2), &layout), Err(GateError::LayoutMismatch(_))));
    }
}

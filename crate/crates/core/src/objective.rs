//! Scoring graphs against gate targets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{ancilla_modes_of, build_target, GateError, GateSpec, TargetLayout, TargetState};
use crate::graph::{Graph, GraphError};
use crate::ket::Ket;
use crate::matchings::{graph_state, state_gradient};

/// Pass/fail tolerance used by verification unless told otherwise.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("graph produces the zero state (no heralded perfect matching)")]
    ZeroState,
    #[error("target is the zero state")]
    ZeroTarget,
    #[error("kets live on different vertex layouts")]
    LayoutMismatch,
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Fidelity,
    CountRate,
}

fn same_layout(a: &Ket, b: &Ket) -> Result<(), ObjectiveError> {
    if a.dims() == b.dims() {
        Ok(())
    } else {
        Err(ObjectiveError::LayoutMismatch)
    }
}

/// `|<t|psi>|^2 / (<psi|psi><t|t>)`.
pub fn fidelity(psi: &Ket, target: &Ket) -> Result<f64, ObjectiveError> {
    same_layout(psi, target)?;
    let np = psi.norm_sqr();
    if np == 0.0 {
        return Err(ObjectiveError::ZeroState);
    }
    let nt = target.norm_sqr();
    if nt == 0.0 {
        return Err(ObjectiveError::ZeroTarget);
    }
    Ok((psi.inner(target).norm_sqr() / (np * nt)).min(1.0))
}

/// `|<t|psi>|^2` with `t` normalized and `psi` left as is: the heralded
/// success probability of producing the target.
pub fn count_rate(psi: &Ket, target: &Ket) -> Result<f64, ObjectiveError> {
    same_layout(psi, target)?;
    let nt = target.norm_sqr();
    if nt == 0.0 {
        return Err(ObjectiveError::ZeroTarget);
    }
    Ok(target.inner(psi).norm_sqr() / nt)
}

pub fn loss(g: &Graph, target: &TargetState, kind: LossKind) -> Result<f64, ObjectiveError> {
    let psi = graph_state(g);
    match kind {
        LossKind::Fidelity => Ok(1.0 - fidelity(&psi, &target.ket)?),
        LossKind::CountRate => Ok(1.0 - count_rate(&psi, &target.ket)?.min(1.0)),
    }
}

/// Per-edge gradient of [`loss`], packed as `dL/d(re w) + i dL/d(im w)`.
///
/// Built from the exact state derivatives of [`state_gradient`]; this is the
/// reference route. The search uses [`crate::evaluator::Evaluator`].
pub fn loss_gradient(
    g: &Graph,
    target: &TargetState,
    kind: LossKind,
) -> Result<Vec<Complex64>, ObjectiveError> {
    let t = target.ket.normalized().ok_or(ObjectiveError::ZeroTarget)?;
    let psi = graph_state(g);
    same_layout(&psi, &t)?;
    let overlap = t.inner(&psi);
    let norm = psi.norm_sqr();
    if kind == LossKind::Fidelity && norm == 0.0 {
        return Err(ObjectiveError::ZeroState);
    }
    let mut out = Vec::with_capacity(g.edge_count());
    for e in 0..g.edge_count() {
        let d = state_gradient(g, e).expect("edge index in range");
        // h = sum_k dL/dpsi_k * dpsi_k/dw_e (Wirtinger, psi holomorphic in w)
        let h = match kind {
            LossKind::Fidelity => {
                let a2 = overlap.norm_sqr();
                -(overlap.conj() * t.inner(&d) * norm - a2 * psi.inner(&d)) / (norm * norm)
            }
            LossKind::CountRate => {
                if overlap.norm_sqr() < 1.0 {
                    -overlap.conj() * t.inner(&d)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        };
        out.push(2.0 * h.conj());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruthRow {
    pub input: Vec<u8>,
    pub expected: Vec<u8>,
    /// Output tuple when the conditional state is (up to `tol`) a single
    /// heralded basis state; `None` for superposed or garbage outputs.
    pub observed: Option<Vec<u8>>,
    pub conditional_fidelity: f64,
    /// Amplitude of the expected term before conditioning.
    pub amplitude: Complex64,
    /// False when no term carries this input at all.
    pub supported: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub gate: String,
    pub fidelity: f64,
    pub count_rate: f64,
    pub truth_table: Vec<TruthRow>,
    pub feed_forwardable: bool,
    pub ancilla_count: usize,
    /// Phase of `<target|psi>`; divided out before comparing amplitudes.
    pub global_phase: Complex64,
    /// `(max - min) / max` of the expected-term magnitudes.
    pub amplitude_spread: f64,
    pub tol: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.feed_forwardable
    }

    pub fn rows_passed(&self) -> usize {
        self.truth_table.iter().filter(|r| r.pass).count()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(ReportDoc::from(self)).expect("reports always serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ReportDoc::from(self)).expect("reports always serialize")
    }
}

#[derive(Serialize)]
struct RowDoc<'a> {
    input: &'a [u8],
    expected: &'a [u8],
    conditional_fidelity: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    gate: &'a str,
    fidelity: f64,
    count_rate: f64,
    feed_forwardable: bool,
    ancilla_count: usize,
    global_phase: [f64; 2],
    amplitude_spread: f64,
    tol: f64,
    rows_passed: usize,
    truth_table: Vec<RowDoc<'a>>,
}

impl<'a> From<&'a VerificationReport> for ReportDoc<'a> {
    fn from(r: &'a VerificationReport) -> Self {
        ReportDoc {
            gate: &r.gate,
            fidelity: r.fidelity,
            count_rate: r.count_rate,
            feed_forwardable: r.feed_forwardable,
            ancilla_count: r.ancilla_count,
            global_phase: [r.global_phase.re, r.global_phase.im],
            amplitude_spread: r.amplitude_spread,
            tol: r.tol,
            rows_passed: r.rows_passed(),
            truth_table: r
                .truth_table
                .iter()
                .map(|row| RowDoc {
                    input: &row.input,
                    expected: &row.expected,
                    conditional_fidelity: row.conditional_fidelity,
                    pass: row.pass,
                })
                .collect(),
        }
    }
}

/// Target of `spec` on the vertices of `g`, heralding the ancilla modes
/// recorded in the graph's roles.
pub fn target_for(g: &Graph, spec: &GateSpec) -> Result<TargetState, ObjectiveError> {
    let spec = spec.clone().with_ancilla_modes(ancilla_modes_of(g));
    Ok(build_target(&spec, &TargetLayout::from_graph(g))?)
}

/// Full verification of `g` as an implementation of `spec`.
///
/// Fails only on precondition errors (invalid graph, arity or dimension
/// mismatch). A graph with the zero state yields a report with fidelity 0.
pub fn verify_gate(g: &Graph, spec: &GateSpec, tol: f64) -> Result<VerificationReport, ObjectiveError> {
    g.checked()?;
    let target = target_for(g, spec)?;
    let layout = &target.layout;
    let psi = graph_state(g);

    let fid = fidelity(&psi, &target.ket).unwrap_or(0.0);
    let rate = count_rate(&psi, &target.ket)?;
    let overlap = target.ket.inner(&psi);
    let global_phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };

    let herald: Vec<(usize, u8)> = g.ancillas().into_iter().map(|(v, m)| (v, m.0)).collect();
    let mut rows = Vec::with_capacity(spec.basis_size());
    for (x, y) in spec.table() {
        let mut total = 0.0;
        let mut best: Option<(&Vec<u8>, f64)> = None;
        for (assignment, amp) in psi.terms() {
            if layout.inputs.iter().zip(&x).any(|(&v, &m)| assignment[v] != m) {
                continue;
            }
            let p = amp.norm_sqr();
            total += p;
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((assignment, p));
            }
        }
        let mut expected_key = vec![0u8; layout.vertex_count()];
        for (slot, (&vi, &vo)) in layout.inputs.iter().zip(&layout.outputs).enumerate() {
            expected_key[vi] = x[slot];
            expected_key[vo] = y[slot];
        }
        for &(v, m) in &herald {
            expected_key[v] = m;
        }
        let amplitude = psi.amplitude(&expected_key);
        let supported = total > 0.0;
        let conditional_fidelity = if supported { (amplitude.norm_sqr() / total).min(1.0) } else { 0.0 };
        let observed = best.and_then(|(key, p)| {
            let heralded = herald.iter().all(|&(v, m)| key[v] == m);
            (heralded && p / total >= 1.0 - tol).then(|| layout.outputs.iter().map(|&v| key[v]).collect())
        });
        rows.push(TruthRow {
            input: x,
            expected: y.to_vec(),
            observed,
            conditional_fidelity,
            amplitude,
            supported,
            pass: supported && conditional_fidelity >= 1.0 - tol,
        });
    }

    let mags: Vec<f64> = rows.iter().map(|r| r.amplitude.norm()).collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let amplitude_spread = if max > 0.0 { (max - min) / max } else { 0.0 };

    let feed_forwardable = fid >= 1.0 - tol && rows.iter().all(|r| r.pass);
    Ok(VerificationReport {
        gate: spec.name.clone(),
        fidelity: fid,
        count_rate: rate,
        truth_table: rows,
        feed_forwardable,
        ancilla_count: herald.len(),
        global_phase,
        amplitude_spread,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(terms: &[(&[u8], f64)]) -> Ket {
        Ket::from_terms(vec![2, 2], terms.iter().map(|(a, x)| (a.to_vec(), Complex64::new(*x, 0.0))))
    }

    #[test]
    fn fidelity_examples() {
        let t = k(&[(&[0, 0], 1.0), (&[1, 1], 1.0)]);
        assert!((fidelity(&t.scaled(Complex64::new(3.0, 0.0)), &t).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&k(&[(&[0, 1], 1.0)]), &t).unwrap(), 0.0);
        assert!((fidelity(&t, &k(&[(&[0, 0], 1.0)])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(fidelity(&Ket::zero(vec![2, 2]), &t), Err(ObjectiveError::ZeroState));
        assert_eq!(fidelity(&Ket::zero(vec![2]), &t), Err(ObjectiveError::LayoutMismatch));
    }

    #[test]
    fn count_rate_examples() {
        let t = k(&[(&[0, 0], 1.0), (&[1, 1], 1.0)]).normalized().unwrap();
        assert!((count_rate(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((count_rate(&t.scaled(Complex64::new(2.0, 0.0)), &t).unwrap() - 4.0).abs() < 1e-14);
        let psi = k(&[(&[0, 0], 1.0), (&[1, 1], 1.0)]);
        assert!((count_rate(&psi, &t).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(count_rate(&Ket::zero(vec![2, 2]), &t).unwrap(), 0.0);
    }
}

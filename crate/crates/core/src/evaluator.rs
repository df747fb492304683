//! Precompiled loss and gradient for a fixed topology.
//!
//! The perfect matchings of the starting topology are enumerated once and
//! stored as flat edge lists together with the basis state each one feeds.
//! Removing an edge drops the matchings that use it; weights never change
//! the matching structure, so evaluation is a pass over this list.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::gates::TargetState;
use crate::graph::Graph;
use crate::matchings::for_each_pm;
use crate::objective::LossKind;

/// Matchings per parallel work unit. Fixed so that floating-point
/// reductions do not depend on the thread count.
const CHUNK: usize = 8192;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct Evaluator {
    kind: LossKind,
    edge_count: usize,
    /// Edges per matching (half the vertex count).
    width: usize,
    /// Flat matching list, `width` edge indices each.
    pm_edges: Vec<u32>,
    /// Basis-state slot of each matching.
    pm_slot: Vec<u32>,
    /// Normalized target amplitude of each slot, conjugated.
    target_conj: Vec<Complex64>,
    active: Vec<bool>,
}

impl Evaluator {
    /// Compiles the matchings of `g` (all edges active) against `target`.
    pub fn new(g: &Graph, target: &TargetState, kind: LossKind) -> Self {
        let t = target.ket.normalized().unwrap_or_else(|| target.ket.clone());
        let width = g.vertex_count() / 2;
        let mut slots: HashMap<Vec<u8>, u32> = HashMap::new();
        let mut target_conj = Vec::new();
        let mut pm_edges = Vec::new();
        let mut pm_slot = Vec::new();
        let mut assignment = vec![0u8; g.vertex_count()];
        for_each_pm(g, None, |edges| {
            for &i in edges {
                let e = &g.edges[i];
                assignment[e.a] = e.mode_a.0;
                assignment[e.b] = e.mode_b.0;
                pm_edges.push(i as u32);
            }
            let next = slots.len() as u32;
            let slot = *slots.entry(assignment.clone()).or_insert_with(|| {
                target_conj.push(t.amplitude(&assignment).conj());
                next
            });
            pm_slot.push(slot);
        });
        Evaluator {
            kind,
            edge_count: g.edge_count(),
            width,
            pm_edges,
            pm_slot,
            target_conj,
            active: vec![true; g.edge_count()],
        }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn matching_count(&self) -> usize {
        self.pm_slot.len()
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, e: usize) -> bool {
        self.active[e]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Copy with edge `e` removed (its matchings dropped).
    pub fn without_edge(&self, e: usize) -> Evaluator {
        let mut pm_edges = Vec::with_capacity(self.pm_edges.len());
        let mut pm_slot = Vec::with_capacity(self.pm_slot.len());
        for (edges, &slot) in self.pm_edges.chunks_exact(self.width.max(1)).zip(&self.pm_slot) {
            if !edges.contains(&(e as u32)) {
                pm_edges.extend_from_slice(edges);
                pm_slot.push(slot);
            }
        }
        let mut active = self.active.clone();
        active[e] = false;
        Evaluator { pm_edges, pm_slot, active, target_conj: self.target_conj.clone(), ..*self }
    }

    fn state(&self, w: &[Complex64]) -> Vec<Complex64> {
        let n = self.target_conj.len();
        let width = self.width.max(1);
        let partial = |range: std::ops::Range<usize>| {
            let mut psi = vec![ZERO; n];
            for p in range {
                let edges = &self.pm_edges[p * width..(p + 1) * width];
                let amp = edges.iter().fold(Complex64::new(1.0, 0.0), |acc, &e| acc * w[e as usize]);
                psi[self.pm_slot[p] as usize] += amp;
            }
            psi
        };
        let count = self.pm_slot.len();
        if count <= CHUNK {
            return partial(0..count);
        }
        let parts: Vec<Vec<Complex64>> = (0..count.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| partial(c * CHUNK..((c + 1) * CHUNK).min(count)))
            .collect();
        let mut psi = vec![ZERO; n];
        for part in parts {
            for (acc, x) in psi.iter_mut().zip(part) {
                *acc += x;
            }
        }
        psi
    }

    /// Returns loss and the Wirtinger adjoint `dL/dpsi` per slot.
    fn loss_and_adjoint(&self, psi: &[Complex64]) -> (f64, Option<Vec<Complex64>>) {
        let overlap: Complex64 = psi.iter().zip(&self.target_conj).map(|(p, t)| t * p).sum();
        let a2 = overlap.norm_sqr();
        match self.kind {
            LossKind::Fidelity => {
                let norm: f64 = psi.iter().map(|p| p.norm_sqr()).sum();
                if norm == 0.0 {
                    return (1.0, None);
                }
                let loss = 1.0 - (a2 / norm).min(1.0);
                let adj = psi
                    .iter()
                    .zip(&self.target_conj)
                    .map(|(p, t)| -(overlap.conj() * t * norm - a2 * p.conj()) / (norm * norm))
                    .collect();
                (loss, Some(adj))
            }
            LossKind::CountRate => {
                let loss = 1.0 - a2.min(1.0);
                if a2 >= 1.0 {
                    return (loss, None);
                }
                let adj = self.target_conj.iter().map(|t| -overlap.conj() * t).collect();
                (loss, Some(adj))
            }
        }
    }

    pub fn loss(&self, w: &[Complex64]) -> f64 {
        debug_assert_eq!(w.len(), self.edge_count);
        self.loss_and_adjoint(&self.state(w)).0
    }

    /// Loss plus per-edge gradient packed as `dL/d(re w) + i dL/d(im w)`.
    /// Inactive edges get a zero gradient.
    pub fn loss_and_grad(&self, w: &[Complex64], grad: &mut [Complex64]) -> f64 {
        debug_assert_eq!(w.len(), self.edge_count);
        let psi = self.state(w);
        let (loss, adjoint) = self.loss_and_adjoint(&psi);
        grad.iter_mut().for_each(|g| *g = ZERO);
        let Some(adjoint) = adjoint else {
            return loss;
        };
        let width = self.width.max(1);
        let partial = |range: std::ops::Range<usize>| {
            let mut h = vec![ZERO; self.edge_count];
            let mut prefix = vec![ZERO; width + 1];
            for p in range {
                let coef = adjoint[self.pm_slot[p] as usize];
                if coef == ZERO {
                    continue;
                }
                let edges = &self.pm_edges[p * width..(p + 1) * width];
                prefix[0] = coef;
                for (j, &e) in edges.iter().enumerate() {
                    prefix[j + 1] = prefix[j] * w[e as usize];
                }
                let mut suffix = Complex64::new(1.0, 0.0);
                for j in (0..edges.len()).rev() {
                    h[edges[j] as usize] += prefix[j] * suffix;
                    suffix *= w[edges[j] as usize];
                }
            }
            h
        };
        let count = self.pm_slot.len();
        let h = if count <= CHUNK {
            partial(0..count)
        } else {
            let parts: Vec<Vec<Complex64>> = (0..count.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| partial(c * CHUNK..((c + 1) * CHUNK).min(count)))
                .collect();
            let mut h = vec![ZERO; self.edge_count];
            for part in parts {
                for (acc, x) in h.iter_mut().zip(part) {
                    *acc += x;
                }
            }
            h
        };
        for (g, h) in grad.iter_mut().zip(h) {
            *g = 2.0 * h.conj();
        }
        loss
    }
}

//! Sparse post-selected states over per-vertex mode assignments.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

/// Amplitudes below this magnitude are dropped after summation.
pub const PRUNE_TOL: f64 = 1e-14;

/// One mode per vertex, indexed by vertex id.
pub type Assignment = Vec<u8>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ket {
    dims: Vec<u8>,
    terms: BTreeMap<Assignment, Complex64>,
}

impl Ket {
    pub fn zero(dims: Vec<u8>) -> Self {
        Ket { dims, terms: BTreeMap::new() }
    }

    /// Builds a ket from raw terms, summing repeated assignments and pruning.
    ///
    /// Panics if an assignment has the wrong length or a mode out of range.
    pub fn from_terms(dims: Vec<u8>, terms: impl IntoIterator<Item = (Assignment, Complex64)>) -> Self {
        let mut ket = Ket::zero(dims);
        for (assignment, amp) in terms {
            ket.accumulate(assignment, amp);
        }
        ket.prune();
        ket
    }

    pub fn dims(&self) -> &[u8] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `amp` to the term at `assignment` without pruning.
    pub fn accumulate(&mut self, assignment: Assignment, amp: Complex64) {
        assert_eq!(assignment.len(), self.dims.len(), "assignment length");
        debug_assert!(assignment.iter().zip(&self.dims).all(|(m, d)| m < d));
        *self.terms.entry(assignment).or_insert(Complex64::new(0.0, 0.0)) += amp;
    }

    pub fn prune(&mut self) {
        self.terms.retain(|_, amp| amp.norm() >= PRUNE_TOL);
    }

    pub fn amplitude(&self, assignment: &[u8]) -> Complex64 {
        self.terms.get(assignment).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Assignment, &Complex64)> {
        self.terms.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> Complex64 {
        let (small, large, flip) =
            if self.len() <= other.len() { (self, other, false) } else { (other, self, true) };
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in &small.terms {
            if let Some(b) = large.terms.get(k) {
                acc += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        acc
    }

    pub fn scaled(&self, factor: Complex64) -> Ket {
        let mut out = self.clone();
        for amp in out.terms.values_mut() {
            *amp *= factor;
        }
        out.prune();
        out
    }

    /// Unit-norm copy, or `None` for the zero ket.
    pub fn normalized(&self) -> Option<Ket> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    /// Largest per-term absolute difference against `other`.
    pub fn max_abs_diff(&self, other: &Ket) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, a) in &self.terms {
            worst = worst.max((a - other.amplitude(k)).norm());
        }
        for (k, b) in &other.terms {
            if !self.terms.contains_key(k) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    /// Relabels vertices: vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Ket {
        let mut dims = vec![0; self.dims.len()];
        for (v, &p) in perm.iter().enumerate() {
            dims[p] = self.dims[v];
        }
        let terms = self.terms.iter().map(|(k, &amp)| {
            let mut moved = vec![0; k.len()];
            for (v, &p) in perm.iter().enumerate() {
                moved[p] = k[v];
            }
            (moved, amp)
        });
        Ket::from_terms(dims, terms)
    }

    /// Terms sorted by descending magnitude, ties broken lexicographically.
    pub fn sorted_terms(&self) -> Vec<(Assignment, Complex64)> {
        let mut out: Vec<(Assignment, Complex64)> =
            self.terms.iter().map(|(k, a)| (k.clone(), *a)).collect();
        out.sort_by(|x, y| y.1.norm().total_cmp(&x.1.norm()).then_with(|| x.0.cmp(&y.0)));
        out
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, a)) in self.sorted_terms().iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let modes: Vec<String> = k.iter().map(|m| m.to_string()).collect();
            write!(f, "({:+.6}{:+.6}i) |{}>", a.re, a.im, modes.join(","))?;
        }
        Ok(())
    }
}

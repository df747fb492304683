//! Perfect matchings of colored graphs and the states they superpose into.
//!
//! The state of a graph is the sum over its perfect matchings of the product
//! of member edge weights, each matching contributing to the basis ket in
//! which every vertex carries the mode of its matched edge endpoint.

use num_complex::Complex64;
use thiserror::Error;

use crate::graph::Graph;
use crate::ket::{Assignment, Ket};

/// Largest edge count accepted by [`oracle_state`].
pub const ORACLE_MAX_EDGES: usize = 24;

/// Vertex limit of the bitmask enumeration.
pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchingError {
    #[error("oracle limited to {ORACLE_MAX_EDGES} edges, graph has {0}")]
    OracleTooLarge(usize),
    #[error("edge index {index} out of range ({count} edges)")]
    EdgeIndex { index: usize, count: usize },
}

/// Edge indices (ascending) covering every vertex exactly once.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PerfectMatching {
    pub edges: Vec<usize>,
}

impl PerfectMatching {
    /// Mode assignment this matching produces.
    pub fn assignment(&self, g: &Graph) -> Assignment {
        assignment_of(g, &self.edges)
    }

    pub fn amplitude(&self, g: &Graph) -> Complex64 {
        self.edges.iter().map(|&e| g.edges[e].weight).product()
    }
}

fn assignment_of(g: &Graph, edges: &[usize]) -> Assignment {
    let mut out = vec![0u8; g.vertex_count()];
    for &i in edges {
        let e = &g.edges[i];
        out[e.a] = e.mode_a.0;
        out[e.b] = e.mode_b.0;
    }
    out
}

/// Per-vertex incident edge lists in canonical (index) order, skipping
/// edges whose `active` flag is false.
fn incidence(g: &Graph, active: Option<&[bool]>) -> Vec<Vec<usize>> {
    let mut inc = vec![Vec::new(); g.vertex_count()];
    for (i, e) in g.edges.iter().enumerate() {
        if active.is_some_and(|mask| !mask[i]) {
            continue;
        }
        inc[e.a].push(i);
        inc[e.b].push(i);
    }
    inc
}

/// Visits every perfect matching in backtracking order: always extend the
/// lowest uncovered vertex, trying its incident edges by index. The slice
/// handed to `visit` lists edges in the order they were chosen.
pub fn for_each_pm(g: &Graph, active: Option<&[bool]>, mut visit: impl FnMut(&[usize])) {
    let n = g.vertex_count();
    assert!(n <= MAX_VERTICES, "at most {MAX_VERTICES} vertices supported");
    if n == 0 || n % 2 == 1 {
        return;
    }
    let inc = incidence(g, active);
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut stack = Vec::with_capacity(n / 2);
    backtrack(g, &inc, 0, full, &mut stack, &mut visit);
}

fn backtrack(
    g: &Graph,
    inc: &[Vec<usize>],
    covered: u64,
    full: u64,
    stack: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if covered == full {
        visit(stack);
        return;
    }
    let v = (!covered).trailing_zeros() as usize;
    for &i in &inc[v] {
        let e = &g.edges[i];
        let u = if e.a == v { e.b } else { e.a };
        if covered & (1u64 << u) != 0 {
            continue;
        }
        stack.push(i);
        backtrack(g, inc, covered | (1u64 << v) | (1u64 << u), full, stack, visit);
        stack.pop();
    }
}

/// All perfect matchings, each as a sorted edge-index tuple, in
/// lexicographic order of those tuples.
pub fn enumerate_pms(g: &Graph) -> Vec<PerfectMatching> {
    let mut out = Vec::new();
    for_each_pm(g, None, |edges| {
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        out.push(PerfectMatching { edges });
    });
    out.sort_unstable();
    out
}

/// Unnormalized post-selected state of `g`.
pub fn graph_state(g: &Graph) -> Ket {
    let mut ket = Ket::zero(g.dims());
    for_each_pm(g, None, |edges| {
        let amp: Complex64 = edges.iter().map(|&i| g.edges[i].weight).product();
        ket.accumulate(assignment_of(g, edges), amp);
    });
    ket.prune();
    ket
}

/// Brute-force state: scan edge subsets and keep those covering every
/// vertex exactly once. Only subsets of size n/2 can do so, so only those
/// are scanned.
pub fn oracle_state(g: &Graph) -> Result<Ket, MatchingError> {
    let m = g.edge_count();
    if m > ORACLE_MAX_EDGES {
        return Err(MatchingError::OracleTooLarge(m));
    }
    let n = g.vertex_count();
    let mut ket = Ket::zero(g.dims());
    if n % 2 == 1 || n / 2 > m {
        return Ok(ket);
    }
    let k = n / 2;
    if k == 0 {
        return Ok(ket);
    }
    let limit: u64 = 1u64 << m;
    // Gosper's hack over all k-subsets of m edges.
    let mut subset: u64 = (1u64 << k) - 1;
    while subset < limit {
        let mut hits = vec![0u8; n];
        let mut members = Vec::with_capacity(k);
        for i in 0..m {
            if subset >> i & 1 == 1 {
                let e = &g.edges[i];
                hits[e.a] += 1;
                hits[e.b] += 1;
                members.push(i);
            }
        }
        if hits.iter().all(|&h| h == 1) {
            let amp: Complex64 = members.iter().map(|&i| g.edges[i].weight).product();
            ket.accumulate(assignment_of(g, &members), amp);
        }
        let low = subset & subset.wrapping_neg();
        let ripple = subset + low;
        subset = (((ripple ^ subset) >> 2) / low) | ripple;
    }
    ket.prune();
    Ok(ket)
}

/// Exact derivative of the state with respect to the weight of edge `e`.
///
/// The state is multilinear in the weights, so this is the superposition
/// over matchings containing `e` with `w_e` left out of each product.
pub fn state_gradient(g: &Graph, e: usize) -> Result<Ket, MatchingError> {
    if e >= g.edge_count() {
        return Err(MatchingError::EdgeIndex { index: e, count: g.edge_count() });
    }
    let mut ket = Ket::zero(g.dims());
    for_each_pm(g, None, |edges| {
        if !edges.contains(&e) {
            return;
        }
        let amp: Complex64 =
            edges.iter().filter(|&&i| i != e).map(|&i| g.edges[i].weight).product();
        ket.accumulate(assignment_of(g, edges), amp);
    });
    ket.prune();
    Ok(ket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Mode, Vertex, VertexRole};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plain(n: usize) -> Graph {
        Graph::new(
            (0..n)
                .map(|id| Vertex { id, role: VertexRole::Ancilla { fixed_mode: Mode(0) }, dim: 2 })
                .collect(),
        )
    }

    fn complete(n: usize) -> Graph {
        let mut g = plain(n);
        for a in 0..n {
            for b in a + 1..n {
                g.add_edge(a, b, 0, 0, c(1.0, 0.0)).unwrap();
            }
        }
        g
    }

    #[test]
    fn single_edge() {
        let mut g = plain(2);
        g.add_edge(0, 1, 0, 0, c(1.0, 0.0)).unwrap();
        assert_eq!(enumerate_pms(&g), vec![PerfectMatching { edges: vec![0] }]);
    }

    #[test]
    fn complete_four_vertex_graph_has_three_matchings() {
        let g = complete(4);
        let pms = enumerate_pms(&g);
        assert_eq!(pms.len(), 3);
        // edges: 0=(0,1) 1=(0,2) 2=(0,3) 3=(1,2) 4=(1,3) 5=(2,3)
        let tuples: Vec<Vec<usize>> = pms.into_iter().map(|p| p.edges).collect();
        assert_eq!(tuples, vec![vec![0, 5], vec![1, 4], vec![2, 3]]);
    }

    #[test]
    fn parallel_colored_edges() {
        let mut g = plain(2);
        g.add_edge(0, 1, 0, 0, c(1.0, 0.0)).unwrap();
        g.add_edge(0, 1, 1, 1, c(1.0, 0.0)).unwrap();
        assert_eq!(enumerate_pms(&g).len(), 2);
        let psi = graph_state(&g);
        assert_eq!(psi.len(), 2);
        assert_eq!(psi.amplitude(&[0, 0]), c(1.0, 0.0));
        assert_eq!(psi.amplitude(&[1, 1]), c(1.0, 0.0));
    }

    #[test]
    fn four_cycle_interferes_destructively() {
        let mut g = plain(4);
        g.add_edge(0, 1, 0, 0, c(1.0, 0.0)).unwrap();
        g.add_edge(1, 2, 0, 0, c(1.0, 0.0)).unwrap();
        g.add_edge(2, 3, 0, 0, c(1.0, 0.0)).unwrap();
        g.add_edge(0, 3, 0, 0, c(-1.0, 0.0)).unwrap();
        assert_eq!(enumerate_pms(&g).len(), 2);
        assert!(graph_state(&g).is_empty());
        assert!(oracle_state(&g).unwrap().is_empty());
    }

    #[test]
    fn odd_and_empty_graphs_have_zero_state() {
        let mut g = plain(3);
        g.add_edge(0, 1, 0, 0, c(1.0, 0.0)).unwrap();
        assert!(graph_state(&g).is_empty());
        assert!(enumerate_pms(&g).is_empty());
        let empty = plain(2);
        assert!(graph_state(&empty).is_empty());
        assert!(oracle_state(&empty).unwrap().is_empty());
    }

    #[test]
    fn oracle_guard() {
        let g = complete(8);
        assert_eq!(g.edge_count(), 28);
        assert_eq!(oracle_state(&g), Err(MatchingError::OracleTooLarge(28)));
    }

    #[test]
    fn gradient_of_single_edge() {
        let mut g = plain(2);
        g.add_edge(0, 1, 1, 0, c(0.3, 0.7)).unwrap();
        let d = state_gradient(&g, 0).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.amplitude(&[1, 0]), c(1.0, 0.0));
        assert!(matches!(state_gradient(&g, 1), Err(MatchingError::EdgeIndex { index: 1, count: 1 })));
    }

    #[test]
    fn gradient_of_unused_edge_is_zero() {
        // edge (0,1) can never be part of a matching: vertex 2 and 3 only meet vertex 0
        let mut g = plain(4);
        g.add_edge(0, 1, 0, 0, c(1.0, 0.0)).unwrap();
        g.add_edge(0, 2, 0, 0, c(1.0, 0.0)).unwrap();
        g.add_edge(1, 3, 0, 0, c(1.0, 0.0)).unwrap();
        assert!(state_gradient(&g, 0).unwrap().is_empty());
        assert!(!state_gradient(&g, 1).unwrap().is_empty());
    }
}

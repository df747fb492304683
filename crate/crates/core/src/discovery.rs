//! Automated search for gate graphs.
//!
//! Starting from the complete colored graph on all inputs, outputs and
//! ancillas, random-restart gradient descent fits the edge weights to the
//! gate's target state. The first restart that gets below the search
//! threshold is then pruned: repeatedly drop the weakest edge, re-fit, and
//! keep the removal only if the loss stays below the threshold.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evaluator::Evaluator;
use crate::gates::{GateSpec, TargetState};
use crate::graph::{Graph, Mode, VertexRole};
use crate::objective::{target_for, verify_gate, LossKind, ObjectiveError, VerificationReport};

/// Gradient norm below which descent stops.
pub const GRAD_TOL: f64 = 1e-9;

/// Restarts evaluated concurrently. The winner is always the lowest
/// successful restart index, whatever the batch size.
const RESTART_BATCH: usize = 8;

/// Stream offset for the fresh draws made during pruning.
const PRUNE_STREAM: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub loss_kind: LossKind,
    pub search_threshold: f64,
    pub polish_threshold: f64,
    pub max_restarts: usize,
    pub steps_per_optimize: usize,
    /// Step budget of the final polish.
    pub polish_steps: usize,
    pub init_scale: f64,
    pub real_only: bool,
    pub seed: u64,
    pub snap_weights: bool,
    /// Vertex pairs that may never share an edge.
    pub forbidden: Vec<(usize, usize)>,
    /// Dimension given to ancilla vertices in the seed topology.
    pub ancilla_dim: u8,
    /// Only seed ancilla endpoints in their heralding mode.
    pub herald_only: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            loss_kind: LossKind::Fidelity,
            search_threshold: 1e-3,
            polish_threshold: 1e-6,
            max_restarts: 50,
            steps_per_optimize: 1500,
            polish_steps: 20_000,
            init_scale: 1.0,
            real_only: false,
            seed: 0,
            snap_weights: false,
            forbidden: Vec::new(),
            ancilla_dim: 2,
            herald_only: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        let bad = |m: &str| Err(DiscoveryError::InvalidConfig(m.to_string()));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.search_threshold.is_nan() || self.search_threshold < 0.0 || !positive(self.polish_threshold) {
            return bad("thresholds must be non-negative (polish positive)");
        }
        if self.polish_threshold > self.search_threshold && self.search_threshold > 0.0 {
            return bad("polish threshold must not exceed the search threshold");
        }
        if !positive(self.init_scale) {
            return bad("init_scale must be positive");
        }
        if self.ancilla_dim < 1 {
            return bad("ancilla_dim must be at least 1");
        }
        Ok(())
    }

    /// Short stable digest of the configuration, for provenance records.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(text.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn is_forbidden(&self, a: usize, b: usize) -> bool {
        let (a, b) = (a.min(b), a.max(b));
        self.forbidden.iter().any(|&(x, y)| (x.min(y), x.max(y)) == (a, b))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscoveryError {
    #[error("{vertices} vertices: a perfect matching needs an even count")]
    Parity { vertices: usize },
    #[error("unmatchable topology: no perfect matching carries the heralded state")]
    Unmatchable,
    #[error("no solution found after {restarts} restarts (best loss {best_loss:.3e})")]
    NoSolution { restarts: usize, best_loss: f64 },
    #[error("polish reached loss {loss:.3e}, above the polish threshold")]
    PolishFailed { loss: f64 },
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Complete colored graph for `spec` with `ancillas` mode-0 heralds.
/// All weights start at zero.
pub fn seed_topology(spec: &GateSpec, ancillas: usize, cfg: &OptimizerConfig) -> Result<Graph, DiscoveryError> {
    let vertices = 2 * spec.arity() + ancillas;
    if vertices % 2 == 1 {
        return Err(DiscoveryError::Parity { vertices });
    }
    let mut g = Graph::with_layout(&spec.input_dims, &vec![Mode(0); ancillas], cfg.ancilla_dim.max(1));
    let allowed = |v: usize, m: u8| match g.vertices[v].role {
        VertexRole::Ancilla { fixed_mode } if cfg.herald_only => m == fixed_mode.0,
        _ => true,
    };
    let mut edges = Vec::new();
    for a in 0..vertices {
        for b in a + 1..vertices {
            if cfg.is_forbidden(a, b) {
                continue;
            }
            for ma in 0..g.vertices[a].dim {
                for mb in 0..g.vertices[b].dim {
                    if allowed(a, ma) && allowed(b, mb) {
                        edges.push((a, b, ma, mb));
                    }
                }
            }
        }
    }
    for (a, b, ma, mb) in edges {
        g.add_edge(a, b, ma, mb, Complex64::new(0.0, 0.0)).expect("seed edges are distinct");
    }
    Ok(g)
}

/// Result of one local minimization.
#[derive(Clone, Debug, PartialEq)]
pub struct Descent {
    pub weights: Vec<Complex64>,
    pub loss: f64,
    pub steps: usize,
}

/// Pluggable local optimizer over the weights of active edges.
pub trait WeightOptimizer: Sync {
    fn minimize(
        &self,
        eval: &Evaluator,
        start: Vec<Complex64>,
        real_only: bool,
        stop_loss: f64,
        max_steps: usize,
    ) -> Descent;
}

/// Gradient descent whose step halves after a rejected move and grows by
/// 10% after an accepted one. Keeps the best point seen.
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveDescent {
    pub initial_step: f64,
}

impl Default for AdaptiveDescent {
    fn default() -> Self {
        AdaptiveDescent { initial_step: 0.1 }
    }
}

fn rescale(eval: &Evaluator, w: &mut [Complex64]) {
    if eval.kind() != LossKind::Fidelity {
        return;
    }
    let max = w.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max > 0.0 {
        w.iter_mut().for_each(|x| *x /= max);
    }
}

impl WeightOptimizer for AdaptiveDescent {
    fn minimize(
        &self,
        eval: &Evaluator,
        mut w: Vec<Complex64>,
        real_only: bool,
        stop_loss: f64,
        max_steps: usize,
    ) -> Descent {
        let m = w.len();
        let mut grad = vec![Complex64::new(0.0, 0.0); m];
        let mut trial_grad = grad.clone();
        let clean = |g: &mut [Complex64]| {
            if real_only {
                g.iter_mut().for_each(|x| x.im = 0.0);
            }
        };
        rescale(eval, &mut w);
        let mut loss = eval.loss_and_grad(&w, &mut grad);
        clean(&mut grad);
        let mut step = self.initial_step;
        let mut trial = w.clone();
        let mut steps = 0;
        while steps < max_steps {
            if loss < stop_loss || grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt() < GRAD_TOL {
                break;
            }
            steps += 1;
            for ((t, x), g) in trial.iter_mut().zip(&w).zip(&grad) {
                *t = x - step * g;
            }
            let trial_loss = eval.loss_and_grad(&trial, &mut trial_grad);
            if trial_loss < loss {
                std::mem::swap(&mut w, &mut trial);
                std::mem::swap(&mut grad, &mut trial_grad);
                clean(&mut grad);
                loss = trial_loss;
                step *= 1.1;
                if eval.kind() == LossKind::Fidelity {
                    // the loss is scale invariant; keep weights O(1) and rescale the gradient with them
                    let max = w.iter().map(|x| x.norm()).fold(0.0, f64::max);
                    if max > 0.0 && !(0.5..=2.0).contains(&max) {
                        w.iter_mut().for_each(|x| *x /= max);
                        grad.iter_mut().for_each(|x| *x *= max);
                    }
                }
            } else {
                step *= 0.5;
                if step < 1e-300 {
                    break;
                }
            }
        }
        rescale(eval, &mut w);
        Descent { weights: w, loss, steps }
    }
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_weights(eval: &Evaluator, cfg: &OptimizerConfig, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let s = cfg.init_scale;
    (0..eval.edge_count())
        .map(|e| {
            let re = rng.random_range(-s..=s);
            let im = rng.random_range(-s..=s);
            if !eval.is_active(e) {
                Complex64::new(0.0, 0.0)
            } else if cfg.real_only {
                Complex64::new(re, 0.0)
            } else {
                Complex64::new(re, im)
            }
        })
        .collect()
}

/// Fits the weights of `g` from a seeded random start (restart 0).
pub fn optimize_weights(
    g: &Graph,
    target: &TargetState,
    cfg: &OptimizerConfig,
) -> Result<(Graph, f64), DiscoveryError> {
    cfg.validate()?;
    let eval = Evaluator::new(g, target, cfg.loss_kind);
    if eval.matching_count() == 0 {
        return Err(DiscoveryError::Unmatchable);
    }
    let d = run_restart(&eval, cfg, &AdaptiveDescent::default(), 0);
    let mut out = g.clone();
    out.set_weights(&d.weights);
    Ok((out, d.loss))
}

fn run_restart(eval: &Evaluator, cfg: &OptimizerConfig, opt: &dyn WeightOptimizer, restart: u64) -> Descent {
    let mut rng = substream(cfg.seed, restart);
    let start = random_weights(eval, cfg, &mut rng);
    opt.minimize(eval, start, cfg.real_only, cfg.search_threshold * 1e-3, cfg.steps_per_optimize)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub edge_count: usize,
    pub loss: f64,
    pub restart: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscoveryResult {
    pub graph: Graph,
    pub loss_trace: Vec<TracePoint>,
    pub fidelity: f64,
    pub loss: f64,
    pub seed: u64,
    pub restart: u64,
    pub report: VerificationReport,
}

impl DiscoveryResult {
    /// `edge_count,loss,restart,seed` lines with a header.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("edge_count,loss,restart,seed\n");
        for p in &self.loss_trace {
            out.push_str(&format!("{},{:e},{},{}\n", p.edge_count, p.loss, p.restart, self.seed));
        }
        out
    }
}

const SNAP_MAGNITUDES: [f64; 4] = [0.0, 1.0, FRAC_1_SQRT_2, 0.5];

fn snap_value(w: Complex64) -> Complex64 {
    let mut best = Complex64::new(0.0, 0.0);
    let mut best_dist = w.norm();
    for &mag in &SNAP_MAGNITUDES[1..] {
        for unit in [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)] {
            let cand = unit * mag;
            let dist = (w - cand).norm();
            if dist < best_dist {
                best = cand;
                best_dist = dist;
            }
        }
    }
    best
}

/// Scales so the largest weight has magnitude 1 and rotates it onto the
/// positive real axis (first index wins ties).
fn canonical_gauge(w: &mut [Complex64], active: &[bool]) {
    let mut pick: Option<(usize, f64)> = None;
    for (i, x) in w.iter().enumerate() {
        if active[i] && pick.is_none_or(|(_, m)| x.norm() > m * (1.0 + 1e-9)) {
            pick = Some((i, x.norm()));
        }
    }
    if let Some((i, m)) = pick {
        if m > 0.0 {
            let factor = w[i].conj() / (m * m);
            w.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

fn restrict(g: &Graph, eval: &Evaluator, w: &[Complex64]) -> Graph {
    let mut out = Graph { vertices: g.vertices.clone(), edges: Vec::new(), meta: g.meta.clone() };
    for (i, e) in g.edges.iter().enumerate() {
        if eval.is_active(i) {
            let mut e = *e;
            e.weight = w[i];
            out.edges.push(e);
        }
    }
    out
}

/// Prunes `g` (whose weights are a fit below the search threshold) down to
/// a minimal topology, then polishes and re-verifies the result.
pub fn prune_topology(g: &Graph, spec: &GateSpec, cfg: &OptimizerConfig) -> Result<DiscoveryResult, DiscoveryError> {
    prune_with(g, spec, cfg, &AdaptiveDescent::default(), 0)
}

fn prune_with(
    g: &Graph,
    spec: &GateSpec,
    cfg: &OptimizerConfig,
    opt: &dyn WeightOptimizer,
    restart: u64,
) -> Result<DiscoveryResult, DiscoveryError> {
    cfg.validate()?;
    let target = target_for(g, spec)?;
    let mut eval = Evaluator::new(g, &target, cfg.loss_kind);
    if eval.matching_count() == 0 {
        return Err(DiscoveryError::Unmatchable);
    }
    let mut w = g.weights();
    let mut loss = eval.loss(&w);
    let mut trace = vec![TracePoint { edge_count: eval.active_count(), loss, restart }];
    let mut protected = vec![false; g.edge_count()];
    let stop = cfg.search_threshold * 1e-3;
    let mut removal = 0u64;

    loop {
        let candidate = (0..g.edge_count())
            .filter(|&e| eval.is_active(e) && !protected[e])
            .min_by(|&x, &y| w[x].norm().total_cmp(&w[y].norm()).then(x.cmp(&y)));
        let Some(e) = candidate else { break };
        let trial = eval.without_edge(e);
        let mut best: Option<Descent> = None;
        if trial.matching_count() > 0 {
            let mut warm = w.clone();
            warm[e] = Complex64::new(0.0, 0.0);
            let d = opt.minimize(&trial, warm, cfg.real_only, stop, cfg.steps_per_optimize);
            if d.loss < cfg.search_threshold {
                best = Some(d);
            } else {
                let mut rng = substream(cfg.seed, PRUNE_STREAM + (restart << 20) + removal);
                let fresh = random_weights(&trial, cfg, &mut rng);
                let f = opt.minimize(&trial, fresh, cfg.real_only, stop, cfg.steps_per_optimize);
                best = Some(if f.loss < d.loss { f } else { d });
            }
        }
        removal += 1;
        match best {
            Some(d) if d.loss < cfg.search_threshold => {
                eval = trial;
                w = d.weights;
                loss = d.loss;
                trace.push(TracePoint { edge_count: eval.active_count(), loss, restart });
            }
            _ => protected[e] = true,
        }
    }

    let polish_stop = cfg.polish_threshold * 1e-3;
    let d = opt.minimize(&eval, w, cfg.real_only, polish_stop, cfg.polish_steps);
    w = d.weights;
    loss = d.loss;
    if loss >= cfg.polish_threshold {
        return Err(DiscoveryError::PolishFailed { loss });
    }
    if cfg.loss_kind == LossKind::Fidelity {
        canonical_gauge(&mut w, eval.active());
    }
    if cfg.snap_weights {
        let snapped: Vec<Complex64> = w.iter().map(|&x| snap_value(x)).collect();
        let snapped_loss = eval.loss(&snapped);
        if snapped_loss < cfg.polish_threshold && snapped.iter().enumerate().all(|(i, x)| !eval.is_active(i) || x.norm() > 0.0) {
            w = snapped;
            loss = snapped_loss;
        }
    }
    trace.push(TracePoint { edge_count: eval.active_count(), loss, restart });

    let graph = restrict(g, &eval, &w);
    let report = verify_gate(&graph, spec, cfg.polish_threshold)?;
    if !report.passed() {
        return Err(DiscoveryError::PolishFailed { loss });
    }
    Ok(DiscoveryResult {
        fidelity: report.fidelity,
        graph,
        loss_trace: trace,
        loss,
        seed: cfg.seed,
        restart,
        report,
    })
}

/// Seeds, fits, prunes and verifies a graph for `spec` with `ancillas`
/// heralding photons. Reproducible from `(spec, ancillas, cfg)`.
pub fn discover(spec: &GateSpec, ancillas: usize, cfg: &OptimizerConfig) -> Result<DiscoveryResult, DiscoveryError> {
    discover_with(spec, ancillas, cfg, &AdaptiveDescent::default())
}

pub fn discover_with(
    spec: &GateSpec,
    ancillas: usize,
    cfg: &OptimizerConfig,
    opt: &dyn WeightOptimizer,
) -> Result<DiscoveryResult, DiscoveryError> {
    cfg.validate()?;
    let seed_graph = seed_topology(spec, ancillas, cfg)?;
    let target = target_for(&seed_graph, spec)?;
    let eval = Evaluator::new(&seed_graph, &target, cfg.loss_kind);
    if eval.matching_count() == 0 {
        return Err(DiscoveryError::Unmatchable);
    }
    let mut best_loss = f64::INFINITY;
    let mut start = 0;
    while start < cfg.max_restarts {
        let end = (start + RESTART_BATCH).min(cfg.max_restarts);
        let fits: Vec<Descent> = (start..end)
            .into_par_iter()
            .map(|r| run_restart(&eval, cfg, opt, r as u64))
            .collect();
        for (r, fit) in (start..end).zip(fits) {
            best_loss = best_loss.min(fit.loss);
            if fit.loss >= cfg.search_threshold {
                continue;
            }
            let mut fitted = seed_graph.clone();
            fitted.set_weights(&fit.weights);
            match prune_with(&fitted, spec, cfg, opt, r as u64) {
                Ok(result) => return Ok(result),
                Err(DiscoveryError::PolishFailed { loss }) => best_loss = best_loss.min(loss),
                Err(e) => return Err(e),
            }
        }
        start = end;
    }
    Err(DiscoveryError::NoSolution { restarts: cfg.max_restarts, best_loss })
}

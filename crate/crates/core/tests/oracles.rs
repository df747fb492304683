use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pathgate::gates::{basis, TargetLayout};
use pathgate::graph::{Graph, Mode, Vertex, VertexRole};
use pathgate::{
    apply_gate, build_target, compose_specs, enumerate_pms, loss, loss_gradient, Evaluator, GateSpec, LossKind,
};

fn complete_single_color(n: usize) -> Graph {
    let vertices = (0..n).map(|id| Vertex { id, role: VertexRole::Ancilla { fixed_mode: Mode(0) }, dim: 1 }).collect();
    let mut g = Graph::new(vertices);
    for a in 0..n {
        for b in a + 1..n {
            g.add_edge(a, b, 0, 0, Complex64::new(1.0, 0.0)).unwrap();
        }
    }
    g
}

/// Perfect matchings of K_{2n} counted by pairing vertex 0 with each other vertex.
fn count_by_recursion(n_vertices: usize) -> u64 {
    if n_vertices == 0 {
        1
    } else {
        (n_vertices as u64 - 1) * count_by_recursion(n_vertices - 2)
    }
}

#[test]
fn complete_graph_matching_counts() {
    let mut counts = Vec::new();
    for n in 1..=5 {
        let got = enumerate_pms(&complete_single_color(2 * n)).len() as u64;
        assert_eq!(got, count_by_recursion(2 * n));
        counts.push(got);
    }
    assert_eq!(counts, vec![1, 3, 15, 105, 945]);
}

#[test]
fn matchings_are_sorted_and_distinct() {
    let pms = enumerate_pms(&complete_single_color(8));
    for w in pms.windows(2) {
        assert!(w[0].edges < w[1].edges);
    }
}

fn builtins() -> Vec<GateSpec> {
    vec![
        GateSpec::swap(2),
        GateSpec::swap(3),
        GateSpec::cx(2, 2),
        GateSpec::cx(2, 3),
        GateSpec::cx(2, 4),
        GateSpec::cx(3, 3),
        GateSpec::ccx(2),
        GateSpec::ccx(3),
        GateSpec::cswap(),
    ]
}

#[test]
fn builtin_truth_maps_are_bijections() {
    for spec in builtins() {
        let mut images: Vec<Vec<u8>> = basis(&spec.input_dims).map(|x| apply_gate(&spec, &x).unwrap()).collect();
        let n = images.len();
        images.sort();
        images.dedup();
        assert_eq!(images.len(), n, "{}", spec.name);
        assert!(images.iter().all(|y| y.iter().zip(&spec.output_dims).all(|(v, d)| v < d)));
    }
}

#[test]
fn controlled_gates_follow_their_controls() {
    for dt in [2u8, 3, 4] {
        let spec = GateSpec::cx(2, dt);
        for t in 0..dt {
            assert_eq!(apply_gate(&spec, &[0, t]).unwrap(), vec![0, t]);
            assert_eq!(apply_gate(&spec, &[1, t]).unwrap(), vec![1, (t + 1) % dt]);
        }
    }
    let cx33 = GateSpec::cx(3, 3);
    for c in 0..3 {
        for t in 0..3 {
            assert_eq!(apply_gate(&cx33, &[c, t]).unwrap(), vec![c, (t + c) % 3]);
        }
    }
    for dt in [2u8, 3] {
        let spec = GateSpec::ccx(dt);
        for x in basis(&spec.input_dims) {
            let shift = u8::from(x[0] == 1 && x[1] == 1);
            assert_eq!(apply_gate(&spec, &x).unwrap(), vec![x[0], x[1], (x[2] + shift) % dt]);
        }
    }
    let cswap = GateSpec::cswap();
    for x in basis(&cswap.input_dims) {
        let expected = if x[0] == 1 { vec![1, x[2], x[1]] } else { x.clone() };
        assert_eq!(apply_gate(&cswap, &x).unwrap(), expected);
    }
    for d in [2u8, 3] {
        let swap = GateSpec::swap(d);
        for x in basis(&swap.input_dims) {
            assert_eq!(apply_gate(&swap, &x).unwrap(), vec![x[1], x[0]]);
        }
    }
}

#[test]
fn composition_examples() {
    let x = GateSpec::x(2);
    let xx = compose_specs(&x, &x).unwrap();
    assert!(xx.table().all(|(i, o)| i == o));
    let id = GateSpec::identity(vec![3]);
    assert!(compose_specs(&id, &id).unwrap().table().all(|(i, o)| i == o));
    assert!(compose_specs(&GateSpec::x(2), &GateSpec::x(3)).is_err());
}

#[test]
fn targets_are_normalized_with_one_term_per_input() {
    for spec in builtins() {
        let spec = spec.with_ancillas(2);
        let k = spec.arity();
        let mut dims = spec.input_dims.clone();
        dims.extend(&spec.output_dims);
        dims.extend([2, 2]);
        let layout = TargetLayout {
            inputs: (0..k).collect(),
            outputs: (k..2 * k).collect(),
            ancillas: vec![2 * k, 2 * k + 1],
            dims,
        };
        let t = build_target(&spec, &layout).unwrap();
        assert_eq!(t.ket.len(), spec.basis_size());
        assert!((t.ket.norm_sqr() - 1.0).abs() < 1e-15);
        let amp = 1.0 / (spec.basis_size() as f64).sqrt();
        assert!(t.ket.terms().all(|(key, a)| (a.re - amp).abs() < 1e-15 && a.im == 0.0 && key[2 * k..] == [0, 0]));
    }
}

/// Random graph on the vertex layout of `spec` with `ancillas` ancillas.
fn random_instance(rng: &mut ChaCha8Rng) -> (Graph, GateSpec) {
    let spec = match rng.random_range(0..4) {
        0 => GateSpec::swap(2),
        1 => GateSpec::cx(2, 2),
        2 => GateSpec::teleport(2),
        _ => GateSpec::cx(2, 3),
    };
    let ancillas = if spec.arity() == 1 { 2 } else { 2 * rng.random_range(0..2) };
    let spec = spec.with_ancillas(ancillas);
    let mut io = spec.input_dims.clone();
    io.truncate(spec.arity());
    let mut g = Graph::with_layout(&io, &vec![Mode(0); ancillas], 2);
    let dims = g.dims();
    let n = g.vertex_count();
    for a in 0..n {
        for b in a + 1..n {
            for ma in 0..dims[a] {
                for mb in 0..dims[b] {
                    if rng.random_bool(0.45) {
                        let w = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                        g.add_edge(a, b, ma, mb, w).unwrap();
                    }
                }
            }
        }
    }
    (g, spec)
}

fn finite_difference(g: &Graph, target: &pathgate::TargetState, kind: LossKind) -> Vec<Complex64> {
    let h = 1e-5;
    let base = g.weights();
    let eval = |w: &[Complex64]| {
        let mut t = g.clone();
        t.set_weights(w);
        loss(&t, target, kind).unwrap()
    };
    (0..base.len())
        .map(|e| {
            let mut partial = [0.0; 2];
            for (k, dir) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)].into_iter().enumerate() {
                let mut up = base.clone();
                let mut down = base.clone();
                up[e] += dir;
                down[e] -= dir;
                partial[k] = (eval(&up) - eval(&down)) / (2.0 * h);
            }
            Complex64::new(partial[0], partial[1])
        })
        .collect()
}

fn relative_error(got: &[Complex64], want: &[Complex64]) -> f64 {
    let diff: f64 = got.iter().zip(want).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let scale: f64 = want.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 50 {
        let (g, spec) = random_instance(&mut rng);
        let layout = TargetLayout::from_graph(&g);
        let target = build_target(&spec, &layout).unwrap();
        let kind = if checked % 2 == 0 { LossKind::Fidelity } else { LossKind::CountRate };
        let Ok(l) = loss(&g, &target, kind) else { continue };
        if l <= 1e-6 || l >= 1.0 - 1e-9 {
            continue;
        }
        let analytic = loss_gradient(&g, &target, kind).unwrap();
        let fd = finite_difference(&g, &target, kind);
        let err = relative_error(&analytic, &fd);
        assert!(err < 1e-6, "instance {checked}: relative error {err}");

        let eval = Evaluator::new(&g, &target, kind);
        let mut compiled = vec![Complex64::new(0.0, 0.0); g.edge_count()];
        let l2 = eval.loss_and_grad(&g.weights(), &mut compiled);
        assert!((l - l2).abs() < 1e-12);
        assert!(relative_error(&compiled, &analytic) < 1e-10);
        checked += 1;
    }
}

use num_complex::Complex64;

use pathgate::catalog::{self, Catalog, CatalogError, FIXTURE_TOL};
use pathgate::gates::{rewire_outputs, tensor_specs};
use pathgate::graph::VertexRole;
use pathgate::matchings::ORACLE_MAX_EDGES;
use pathgate::objective::target_for;
use pathgate::{compose_specs, graph_state, loss, loss_gradient, oracle_state, verify_gate, GateSpec, LossKind, ObjectiveError};

fn load(id: &str) -> catalog::Fixture {
    Catalog::default().load_fixture(id).unwrap_or_else(|e| panic!("{id}: {e}"))
}

#[test]
fn every_listed_fixture_loads_and_verifies() {
    let ids = catalog::list_fixtures();
    for required in [
        "swap2-crossing",
        "teleport2-pi",
        "swap2-double-teleport",
        "cx-2-2",
        "cx-2-3",
        "cx-2-4",
        "cx-3-3",
        "ccx-2",
        "ccx-3",
        "cswap-2",
    ] {
        assert!(ids.contains(&required), "{required}");
    }
    for id in ids {
        let f = load(id);
        let report = verify_gate(&f.graph, &f.spec, FIXTURE_TOL).unwrap();
        assert!(report.passed(), "{id}");
        assert!(report.fidelity >= 1.0 - FIXTURE_TOL, "{id}");
        assert_eq!(report.rows_passed(), f.spec.basis_size());
        assert_eq!(report.ancilla_count, f.expected.ancilla_count);
    }
}

#[test]
fn stated_ancilla_counts() {
    for (id, n) in [("ccx-2", 4), ("ccx-3", 4), ("cswap-2", 4), ("cx-3-3", 4), ("cx-2-2", 2), ("swap2-crossing", 0)] {
        let f = load(id);
        let count = f.graph.vertices.iter().filter(|v| v.role.is_ancilla()).count();
        assert_eq!(count, n, "{id}");
        assert_eq!(f.expected.ancilla_count, n, "{id}");
    }
}

#[test]
fn fixture_states_agree_with_the_oracle() {
    for id in catalog::list_fixtures() {
        let f = load(id);
        if f.graph.edge_count() > ORACLE_MAX_EDGES {
            continue;
        }
        let diff = graph_state(&f.graph).max_abs_diff(&oracle_state(&f.graph).unwrap());
        assert!(diff < 1e-12, "{id}: {diff}");
    }
}

#[test]
fn crossing_swap_is_four_edges() {
    let f = load("swap2-crossing");
    assert_eq!(f.graph.edge_count(), 4);
    let r = verify_gate(&f.graph, &GateSpec::swap(2), 1e-12).unwrap();
    assert!(1.0 - r.fidelity <= 1e-12);
}

fn direct_io_edges(g: &pathgate::Graph) -> usize {
    g.edges
        .iter()
        .filter(|e| {
            let roles = (g.vertices[e.a].role, g.vertices[e.b].role);
            matches!(
                roles,
                (VertexRole::Input { .. }, VertexRole::Output { .. }) | (VertexRole::Output { .. }, VertexRole::Input { .. })
            )
        })
        .count()
}

#[test]
fn teleporter_never_touches_its_output() {
    let f = load("teleport2-pi");
    assert!(f.nonlocal);
    assert_eq!(direct_io_edges(&f.graph), 0);
    let r = verify_gate(&f.graph, &GateSpec::teleport(2), FIXTURE_TOL).unwrap();
    assert_eq!(r.truth_table.len(), 2);
    assert!(r.truth_table.iter().all(|row| row.pass));
}

#[test]
fn double_teleport_swaps() {
    let tele = GateSpec::teleport(2);
    let identity = compose_specs(&tele, &tele).unwrap();
    assert!(identity.table().all(|(x, y)| x == y));
    let crossed = rewire_outputs(&tensor_specs(&tele, &tele), &[1, 0]).unwrap();
    assert!(crossed.table().eq(GateSpec::swap(2).table()));

    let f = load("swap2-double-teleport");
    assert_eq!(direct_io_edges(&f.graph), 0);
    let r = verify_gate(&f.graph, &GateSpec::swap(2), FIXTURE_TOL).unwrap();
    assert!(r.passed());
    assert_eq!(r.rows_passed(), 4);
}

#[test]
fn cnot_fixture_is_stationary() {
    let f = load("cx-2-2");
    let target = target_for(&f.graph, &f.spec).unwrap();
    assert!(loss(&f.graph, &target, LossKind::Fidelity).unwrap() < 1e-9);
    let g = loss_gradient(&f.graph, &target, LossKind::Fidelity).unwrap();
    let norm: f64 = g.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    assert!(norm < 1e-6, "gradient norm {norm}");
}

#[test]
fn report_is_sensitive_to_ancilla_edges() {
    let f = load("cx-2-2");
    let base = verify_gate(&f.graph, &f.spec, FIXTURE_TOL).unwrap();
    let mut tried = 0;
    for (i, e) in f.graph.edges.iter().enumerate() {
        if !(f.graph.vertices[e.a].role.is_ancilla() || f.graph.vertices[e.b].role.is_ancilla()) {
            continue;
        }
        tried += 1;
        let mut g = f.graph.clone();
        g.remove_edge(i).unwrap();
        let r = verify_gate(&g, &f.spec, FIXTURE_TOL).unwrap();
        assert!(r.fidelity < base.fidelity || r.truth_table.iter().any(|row| !row.pass), "edge {i}");
    }
    assert!(tried > 0);
}

#[test]
fn wrong_arity_is_a_precondition_error() {
    let f = load("cx-2-2");
    let err = verify_gate(&f.graph, &GateSpec::ccx(2), 1e-6).unwrap_err();
    assert!(matches!(err, ObjectiveError::Gate(_) | ObjectiveError::LayoutMismatch), "{err:?}");
}

#[test]
fn unknown_ids_are_rejected() {
    assert!(matches!(Catalog::default().load_fixture("nope"), Err(CatalogError::UnknownId(_))));
    assert!(matches!(catalog::entry("nope"), Err(CatalogError::UnknownId(_))));
}

#[test]
fn drift_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = load("cx-2-2");
    f.graph.edges[0].weight *= Complex64::new(0.5, 0.0);
    let cat = Catalog::open(dir.path());
    cat.save(&f).unwrap();
    assert!(matches!(cat.load_fixture("cx-2-2"), Err(CatalogError::Drift { .. })));

    let mut tele = load("teleport2-pi");
    let (a, b) = (tele.graph.inputs()[0], tele.graph.outputs()[0]);
    tele.graph.add_edge(a, b, 0, 0, Complex64::new(1e-12, 0.0)).unwrap();
    cat.save(&tele).unwrap();
    assert!(matches!(cat.load_fixture("teleport2-pi"), Err(CatalogError::Drift { .. })));
}

#[test]
fn save_and_reload_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cat = Catalog::open(dir.path());
    for id in ["teleport2-pi", "cx-2-3"] {
        let f = load(id);
        cat.save(&f).unwrap();
        assert_eq!(cat.load_fixture(id).unwrap(), f);
        assert_eq!(std::fs::read_to_string(cat.path_of(id)).unwrap(), f.to_json());
    }
}

#[test]
fn quick_recipes_regenerate_consistently() {
    let cat = Catalog::default();
    for id in ["swap2-crossing", "teleport2-pi", "swap2-double-teleport", "cx-2-2"] {
        let r = cat.regenerate_fixture(id, None, false, "test").unwrap();
        assert!(r.consistent, "{id}");
        assert!(r.fixture.expected.fidelity >= 1.0 - FIXTURE_TOL);
    }
    let swap = cat.regenerate_fixture("swap2-crossing", None, false, "test").unwrap();
    assert_eq!(swap.fixture.graph.edge_count(), 4);
    assert_eq!(swap.fixture.expected.ancilla_count, 0);
    let tele = cat.regenerate_fixture("teleport2-pi", None, false, "test").unwrap();
    assert_eq!(direct_io_edges(&tele.fixture.graph), 0);
}

#[test]
fn long_recipes_need_opt_in() {
    let err = Catalog::default().regenerate_fixture("ccx-3", None, false, "test").unwrap_err();
    assert!(matches!(err, CatalogError::LongRunning(_)));
}

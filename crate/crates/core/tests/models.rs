use phdae_core::analyze::{check_dh_equivalence, index, DHVariant};
use phdae_core::models::{build, BuiltSystem, ModelKind, ModelSpec};
use phdae_core::structures::Frame;
use phdae_core::{Mat, TolerancePolicy};

use nalgebra::{dmatrix, dvector};

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

const KINDS: [ModelKind; 7] = [
    ModelKind::Rlc,
    ModelKind::Lc,
    ModelKind::Stokes,
    ModelKind::Gas,
    ModelKind::Mechanical,
    ModelKind::Msd,
    ModelKind::TwoMass,
];

#[test]
fn fixtures_match_their_facts() {
    for kind in KINDS {
        let m = build(&ModelSpec::new(kind)).unwrap();
        assert!(m.system.validate(&tol()).unwrap().valid, "{kind:?}");
        let nu = index(&m.system.pencil().unwrap(), &tol()).unwrap().index;
        if let Some(want) = m.facts.index {
            assert_eq!(nu, want, "{kind:?}");
        }
        if let Some(max) = m.facts.max_index {
            assert!(nu <= max, "{kind:?}: index {nu} > {max}");
        }
        assert!(nu <= 2, "{kind:?}");
        let g = m.system.energy_gram();
        for &i in &m.facts.hamiltonian_free {
            assert_eq!(g.row(i).amax(), 0.0, "{kind:?} variable {i}");
            assert_eq!(g.column(i).amax(), 0.0, "{kind:?} variable {i}");
        }
        assert_eq!(m.variables.len(), g.nrows(), "{kind:?}");
    }
}

#[test]
fn dh_fixtures_are_stable_pencils() {
    // a dH pencil with Q = I is Lyapunov stable with index at most two
    for kind in [ModelKind::Rlc, ModelKind::Stokes, ModelKind::Mechanical, ModelKind::Msd] {
        let m = build(&ModelSpec::new(kind)).unwrap();
        let BuiltSystem::Dh(dh) = &m.system else { continue };
        if dh.q != Mat::identity(dh.q.nrows(), dh.q.ncols()) {
            continue;
        }
        let v = check_dh_equivalence(&m.system.pencil().unwrap(), DHVariant::QIdentity, &tol()).unwrap();
        assert!(v.equivalent, "{kind:?}: {:?}", v.failed_conditions);
    }
}

#[test]
fn two_mass_limit_energy_is_kinetic() {
    let (m1, m2) = (1.5, 0.5);
    let m = build(&ModelSpec::new(ModelKind::TwoMass).param("m1", m1).param("m2", m2)).unwrap();
    let BuiltSystem::Extended(sys) = &m.system else { panic!("extended fixture expected") };
    let h = sys.hamiltonian(&dvector![0.0, 0.0, 0.0, 1.0], Frame::Z, &tol()).unwrap();
    assert!((h - 1.0 / (2.0 * (m1 + m2))).abs() < 1e-15);
}

#[test]
fn msd_lossless_fixture() {
    let m = build(&ModelSpec::new(ModelKind::Msd).param("m", 2.0).param("k", 3.0).param("d", 0.0)).unwrap();
    let BuiltSystem::Dh(dh) = &m.system else { panic!("dH fixture expected") };
    assert_eq!(dh.r, Mat::zeros(2, 2));
    let v = check_dh_equivalence(&m.system.pencil().unwrap(), DHVariant::Lossless, &tol()).unwrap();
    assert!(v.equivalent);
}

#[test]
fn rlc_accepts_custom_graph() {
    // one capacitor from node 1 to ground, resistor between nodes, inductor
    // from node 2 to ground, current source into node 1
    let spec = ModelSpec::new(ModelKind::Rlc)
        .matrix("D_C", &dmatrix![1.0; 0.0])
        .matrix("D_R", &dmatrix![1.0; -1.0])
        .matrix("D_L", &dmatrix![0.0; 1.0])
        .matrix("D_S", &dmatrix![1.0; 0.0]);
    let m = build(&spec).unwrap();
    assert!(m.system.validate(&tol()).unwrap().valid);
    assert!(index(&m.system.pencil().unwrap(), &tol()).unwrap().index <= 2);
}

#[test]
fn invalid_parameters_are_rejected() {
    for (kind, name) in [(ModelKind::Msd, "k"), (ModelKind::TwoMass, "m1"), (ModelKind::Stokes, "nu")] {
        assert!(build(&ModelSpec::new(kind).param(name, -1.0)).is_err(), "{kind:?} {name}");
    }
}

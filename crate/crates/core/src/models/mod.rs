//! Parameterized physical fixtures.

mod blocks;

pub use blocks::{four_block_representations, BlockRepresentation};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analyze::Pencil;
use crate::error::{Error, Result};
use crate::numkernel::{assemble, block_diag, left_annihilator, rank_tol, Mat, RealMatrix, TolerancePolicy};
use crate::structures::{DHSystem, ExtendedHDAE, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Rlc,
    Lc,
    Stokes,
    Gas,
    Mechanical,
    Msd,
    TwoMass,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rlc" => ModelKind::Rlc,
            "lc" => ModelKind::Lc,
            "stokes" => ModelKind::Stokes,
            "gas" => ModelKind::Gas,
            "mechanical" => ModelKind::Mechanical,
            "msd" => ModelKind::Msd,
            "two-mass" => ModelKind::TwoMass,
            other => return Err(Error::InvalidInput(format!("unknown model '{other}'"))),
        })
    }
}

/// Model request. Scalar parameters named `X` apply to every element of a
/// diagonal; `X1`, `X2`, ... override single entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    /// Limit case for `msd`: `m-zero`, `k-infinity` or `both`.
    #[serde(default)]
    pub variant: Option<String>,
    /// Incidence or coupling matrices.
    #[serde(default)]
    pub graph: BTreeMap<String, RealMatrix>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec { kind, parameters: BTreeMap::new(), variant: None, graph: BTreeMap::new() }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn variant(mut self, v: &str) -> Self {
        self.variant = Some(v.to_string());
        self
    }

    pub fn matrix(mut self, name: &str, m: &Mat) -> Self {
        self.graph.insert(name.to_string(), RealMatrix::from_mat(m));
        self
    }

    fn scalar(&self, name: &str, default: f64) -> f64 {
        self.parameters.get(name).copied().unwrap_or(default)
    }

    fn positive(&self, name: &str, default: f64) -> Result<f64> {
        let v = self.scalar(name, default);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidParameters(format!("{name} must be positive, got {v}")))
        }
    }

    fn nonnegative(&self, name: &str, default: f64) -> Result<f64> {
        let v = self.scalar(name, default);
        if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidParameters(format!("{name} must be nonnegative, got {v}")))
        }
    }

    fn size(&self, name: &str, default: usize) -> Result<usize> {
        let v = self.scalar(name, default as f64);
        if v >= 0.0 && v.fract() == 0.0 && v < 1e6 {
            Ok(v as usize)
        } else {
            Err(Error::InvalidParameters(format!("{name} must be a nonnegative integer, got {v}")))
        }
    }

    /// Positive diagonal of length `count`.
    fn diag(&self, name: &str, count: usize, default: f64) -> Result<Mat> {
        let base = self.positive(name, default)?;
        let mut d = Mat::zeros(count, count);
        for i in 0..count {
            let key = format!("{name}{}", i + 1);
            let v = self.scalar(&key, base);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameters(format!("{key} must be positive, got {v}")));
            }
            d[(i, i)] = v;
        }
        Ok(d)
    }

    fn graph_or(&self, name: &str, default: Mat) -> Result<Mat> {
        match self.graph.get(name) {
            Some(m) => m.to_mat().map_err(|e| Error::InvalidParameters(format!("{name}: {e}"))),
            None => Ok(default),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BuiltSystem {
    Dh(DHSystem),
    Extended(ExtendedHDAE),
}

impl BuiltSystem {
    pub fn pencil(&self) -> Result<Pencil> {
        match self {
            BuiltSystem::Dh(s) => Pencil::try_from(s),
            BuiltSystem::Extended(s) => Pencil::try_from(s),
        }
    }

    /// Gram matrix of the energy: `E^T Q` or `P^T S`.
    pub fn energy_gram(&self) -> Mat {
        match self {
            BuiltSystem::Dh(s) => s.e.transpose() * &s.q,
            BuiltSystem::Extended(s) => s.p.transpose() * &s.s,
        }
    }

    pub fn validate(&self, tol: &TolerancePolicy) -> Result<ValidationReport> {
        match self {
            BuiltSystem::Dh(s) => s.validate(tol),
            BuiltSystem::Extended(s) => s.validate(tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ExpectedFacts {
    /// Exact differentiation index when it is known in closed form.
    pub index: Option<usize>,
    pub max_index: Option<usize>,
    /// Variables with exactly zero rows and columns in the energy Gram matrix.
    pub hamiltonian_free: Vec<usize>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub variables: Vec<String>,
    pub system: BuiltSystem,
    pub facts: ExpectedFacts,
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

pub fn build(spec: &ModelSpec) -> Result<Model> {
    let (variables, system, facts) = match spec.kind {
        ModelKind::Rlc => rlc(spec)?,
        ModelKind::Lc => lc(spec)?,
        ModelKind::Stokes => stokes(spec)?,
        ModelKind::Gas => gas(spec)?,
        ModelKind::Mechanical => mechanical(spec)?,
        ModelKind::Msd => msd(spec)?,
        ModelKind::TwoMass => two_mass(spec)?,
    };
    let rep = system.validate(&TolerancePolicy::default())?;
    if !rep.valid {
        let v: Vec<_> = rep.violations().map(|c| c.invariant.clone()).collect();
        return Err(Error::InvalidParameters(format!("fixture fails {}", v.join("; "))));
    }
    Ok(Model { spec: spec.clone(), variables, system, facts })
}

type Built = (Vec<String>, BuiltSystem, ExpectedFacts);

fn rlc(spec: &ModelSpec) -> Result<Built> {
    // default: two nodes plus ground; source and resistor at node 1, an
    // inductor between the nodes, a capacitor at node 2
    let dc = spec.graph_or("D_C", Mat::from_row_slice(2, 1, &[0.0, 1.0]))?;
    let dl = spec.graph_or("D_L", Mat::from_row_slice(2, 1, &[1.0, -1.0]))?;
    let dr = spec.graph_or("D_R", Mat::from_row_slice(2, 1, &[1.0, 0.0]))?;
    let ds = spec.graph_or("D_S", Mat::from_row_slice(2, 1, &[1.0, 0.0]))?;
    let nv = dc.nrows();
    if [&dl, &dr, &ds].iter().any(|m| m.nrows() != nv) {
        return Err(Error::InvalidParameters("incidence blocks need equal row counts".into()));
    }
    let (nl, ns) = (dl.ncols(), ds.ncols());
    if rank_tol(&ds, &TolerancePolicy::default())? != ns {
        return Err(Error::InvalidParameters("D_S must have full column rank".into()));
    }
    let c = spec.diag("C", dc.ncols(), 1.0)?;
    let l = spec.diag("L", nl, 1.0)?;
    let g = spec.diag("G", dr.ncols(), 1.0)?;
    let sizes = [nv, nl, ns];
    let e = assemble(&sizes, &sizes, &[(0, 0, &dc * &c * dc.transpose()), (1, 1, l)]);
    let j = assemble(
        &sizes,
        &sizes,
        &[
            (0, 1, -&dl),
            (0, 2, -&ds),
            (1, 0, dl.transpose()),
            (2, 0, ds.transpose()),
        ],
    );
    let r = assemble(&sizes, &sizes, &[(0, 0, &dr * &g * dr.transpose())]);
    let n = nv + nl + ns;
    let mut vars = names("V", nv);
    vars.extend(names("I_L", nl));
    vars.extend(names("I_S", ns));
    let facts = ExpectedFacts {
        hamiltonian_free: (nv + nl..n).collect(),
        notes: vec!["energy does not involve the source currents".into()],
        ..Default::default()
    };
    Ok((vars, BuiltSystem::Dh(DHSystem::new(e, j, r, Mat::identity(n, n))), facts))
}

fn lc(spec: &ModelSpec) -> Result<Built> {
    // reduced incidence (ground row removed); first n_c branches are capacitors
    let d = spec.graph_or("D", Mat::from_row_slice(1, 2, &[1.0, 1.0]))?;
    let nc = spec.size("n_c", 1)?;
    let b = d.ncols();
    if nc > b {
        return Err(Error::InvalidParameters("n_c exceeds the number of branches".into()));
    }
    let tol = TolerancePolicy::default();
    if rank_tol(&d, &tol)? != d.nrows() {
        return Err(Error::InvalidParameters("reduced incidence must have full row rank".into()));
    }
    let nl = b - nc;
    let f = left_annihilator(&d.transpose(), &tol)?;
    let (dc, dl) = (d.columns(0, nc).into_owned(), d.columns(nc, nl).into_owned());
    let (fc, fl) = (f.columns(0, nc).into_owned(), f.columns(nc, nl).into_owned());
    let rows = [d.nrows(), f.nrows()];
    let cols = [nc, nl];
    let k = assemble(&rows, &cols, &[(0, 0, dc), (1, 1, fl)]);
    let l = assemble(&rows, &cols, &[(0, 1, dl), (1, 0, fc)]);
    let c = spec.diag("C", nc, 1.0)?;
    let ind = spec.diag("L", nl, 1.0)?;
    let inv = |m: &Mat| Mat::from_diagonal(&m.diagonal().map(|v| 1.0 / v));
    let s = block_diag(&[&inv(&c), &inv(&ind)]);
    let mut vars = names("q", nc);
    vars.extend(names("phi", nl));
    let sys = ExtendedHDAE::new(k, l, Mat::identity(b, b), s);
    Ok((vars, BuiltSystem::Extended(sys), ExpectedFacts::default()))
}

/// Second difference `tridiag(-1, 2, -1)`.
fn laplacian(n: usize) -> Mat {
    Mat::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    })
}

fn stokes(spec: &ModelSpec) -> Result<Built> {
    let nv = spec.size("n", 4)?;
    if nv < 2 {
        return Err(Error::InvalidParameters("n must be at least 2".into()));
    }
    let np = nv - 1;
    let h = spec.positive("h", 1.0 / (nv as f64 + 1.0))?;
    let nu = spec.positive("nu", 1.0)?;
    let m = Mat::from_fn(nv, nv, |i, j| match i.abs_diff(j) {
        0 => 4.0 * h / 6.0,
        1 => h / 6.0,
        _ => 0.0,
    });
    let a = laplacian(nv) * (nu / h);
    let b = Mat::from_fn(nv, np, |i, j| {
        if i == j {
            -1.0
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let sz = [nv, np];
    let e = assemble(&sz, &sz, &[(0, 0, m)]);
    let j = assemble(&sz, &sz, &[(0, 1, b.clone()), (1, 0, -b.transpose())]);
    let r = assemble(&sz, &sz, &[(0, 0, a)]);
    let n = nv + np;
    let mut vars = names("v", nv);
    vars.extend(names("p", np));
    let facts = ExpectedFacts {
        hamiltonian_free: (nv..n).collect(),
        notes: vec!["energy does not involve the pressure".into()],
        ..Default::default()
    };
    Ok((vars, BuiltSystem::Dh(DHSystem::new(e, j, r, Mat::identity(n, n))), facts))
}

fn gas(spec: &ModelSpec) -> Result<Built> {
    let g = spec.graph_or("G", Mat::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0]))?;
    let (np, nq) = g.shape();
    let kc = spec.graph_or("K", Mat::from_row_slice(1, 3, &[1.0, 0.0, 0.0]))?;
    if kc.ncols() != nq {
        return Err(Error::InvalidParameters("K must have one column per flux".into()));
    }
    let nl = kc.nrows();
    let m1 = spec.diag("M1", np, 1.0)?;
    let m2 = spec.diag("M2", nq, 1.0)?;
    let d = spec.diag("D", nq, 1.0)?;
    let sz = [np, nq, nl];
    let e = assemble(&sz, &sz, &[(0, 0, m1), (1, 1, m2)]);
    let j = assemble(
        &sz,
        &sz,
        &[(0, 1, -&g), (1, 0, g.transpose()), (1, 2, kc.transpose()), (2, 1, -&kc)],
    );
    let r = assemble(&sz, &sz, &[(1, 1, d)]);
    let n = np + nq + nl;
    let mut vars = names("p", np);
    vars.extend(names("q", nq));
    vars.extend(names("lambda", nl));
    let facts = ExpectedFacts {
        hamiltonian_free: (np + nq..n).collect(),
        notes: vec!["energy does not involve the Lagrange multiplier".into()],
        ..Default::default()
    };
    Ok((vars, BuiltSystem::Dh(DHSystem::new(e, j, r, Mat::identity(n, n))), facts))
}

fn mechanical(spec: &ModelSpec) -> Result<Built> {
    let nq = spec.size("n", 3)?;
    let nc = spec.size("constraints", 1)?;
    if nc > nq {
        return Err(Error::InvalidParameters("more constraints than coordinates".into()));
    }
    let gc = spec.graph_or("G", Mat::from_fn(nc, nq, |i, j| if i == j { 1.0 } else { 0.0 }))?;
    if gc.ncols() != nq {
        return Err(Error::InvalidParameters("G must have one column per coordinate".into()));
    }
    let nc = gc.nrows();
    let m = spec.diag("m", nq, 1.0)?;
    let k = spec.positive("k", 1.0)?;
    let d = spec.nonnegative("d", 0.1)?;
    let w = laplacian(nq) * k;
    let sz = [nq, nq, nc];
    let e = assemble(&sz, &sz, &[(0, 0, m), (1, 1, Mat::identity(nq, nq))]);
    let j = assemble(
        &sz,
        &sz,
        &[
            (0, 1, -Mat::identity(nq, nq)),
            (1, 0, Mat::identity(nq, nq)),
            (0, 2, gc.transpose()),
            (2, 0, -&gc),
        ],
    );
    let r = assemble(&sz, &sz, &[(0, 0, Mat::identity(nq, nq) * d)]);
    let q = block_diag(&[&Mat::identity(nq, nq), &w, &Mat::identity(nc, nc)]);
    let n = 2 * nq + nc;
    let mut vars = names("qdot", nq);
    vars.extend(names("q", nq));
    vars.extend(names("lambda", nc));
    let facts = ExpectedFacts {
        max_index: (nc == 0).then_some(1),
        hamiltonian_free: (2 * nq..n).collect(),
        notes: vec!["energy does not involve the Lagrange multiplier".into()],
        ..Default::default()
    };
    Ok((vars, BuiltSystem::Dh(DHSystem::new(e, j, r, q)), facts))
}

fn msd(spec: &ModelSpec) -> Result<Built> {
    let m = spec.positive("m", 1.0)?;
    let k = spec.positive("k", 1.0)?;
    let d = spec.nonnegative("d", 0.0)?;
    let jr = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -d]);
    let j = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let r = &j - jr;
    let diag = |a: f64, b: f64| Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![a, b]));
    let (vars, e, q, facts) = match spec.variant.as_deref() {
        None | Some("none") => (["q", "p"], Mat::identity(2, 2), diag(k, 1.0 / m), ExpectedFacts {
            index: Some(0),
            ..Default::default()
        }),
        Some("m-zero") => (["q", "v"], diag(1.0, 0.0), diag(k, 1.0), ExpectedFacts {
            index: Some(if d != 0.0 { 1 } else { 2 }),
            hamiltonian_free: vec![1],
            ..Default::default()
        }),
        Some("k-infinity") => (["F", "p"], diag(0.0, 1.0), diag(1.0, 1.0 / m), ExpectedFacts {
            index: Some(2),
            hamiltonian_free: vec![0],
            ..Default::default()
        }),
        Some("both") => (["F", "v"], Mat::zeros(2, 2), Mat::identity(2, 2), ExpectedFacts {
            index: Some(1),
            hamiltonian_free: vec![0, 1],
            notes: vec!["only the zero solution".into()],
            ..Default::default()
        }),
        Some(other) => return Err(Error::InvalidParameters(format!("unknown msd variant '{other}'"))),
    };
    let vars = vars.iter().map(|s| s.to_string()).collect();
    Ok((vars, BuiltSystem::Dh(DHSystem::new(e, j, r, q)), facts))
}

/// Two masses joined by a rigid link, the second one held at rest.
pub fn two_mass_system(m1: f64, m2: f64) -> ExtendedHDAE {
    let mt = m1 + m2;
    let k = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0, 0.0]));
    #[rustfmt::skip]
    let l = Mat::from_row_slice(4, 4, &[
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        -1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    ]);
    #[rustfmt::skip]
    let p = Mat::from_row_slice(4, 4, &[
        0.0, 1.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, m1 / mt,
        0.0, 0.0, -1.0, m2 / mt,
    ]);
    #[rustfmt::skip]
    let s = Mat::from_row_slice(4, 4, &[
        1.0, 0.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 1.0 / m1, 1.0 / mt,
        0.0, 0.0, -1.0 / m2, 1.0 / mt,
    ]);
    ExtendedHDAE::new(k, l, p, s)
}

fn two_mass(spec: &ModelSpec) -> Result<Built> {
    let m1 = spec.positive("m1", 1.0)?;
    let m2 = spec.positive("m2", 2.0)?;
    let facts = ExpectedFacts {
        index: Some(2),
        hamiltonian_free: vec![0, 1],
        notes: vec!["energy reduces to the last coordinate once the third vanishes".into()],
        ..Default::default()
    };
    Ok((names("z", 4), BuiltSystem::Extended(two_mass_system(m1, m2)), facts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::index;

    fn idx(spec: &ModelSpec) -> usize {
        let m = build(spec).unwrap();
        index(&m.system.pencil().unwrap(), &TolerancePolicy::default()).unwrap().index
    }

    #[test]
    fn every_kind_builds() {
        for kind in ["rlc", "lc", "stokes", "gas", "mechanical", "msd", "two-mass"] {
            let m = build(&ModelSpec::new(kind.parse().unwrap())).unwrap();
            let g = m.system.energy_gram();
            assert_eq!(m.variables.len(), g.nrows(), "{kind}");
            for &i in &m.facts.hamiltonian_free {
                assert!(g.row(i).iter().chain(g.column(i).iter()).all(|&v| v == 0.0), "{kind} {i}");
            }
        }
    }

    #[test]
    fn msd_limits() {
        let base = ModelSpec::new(ModelKind::Msd).param("k", 2.0).param("m", 0.5);
        assert_eq!(idx(&base.clone().variant("m-zero").param("d", 0.3)), 1);
        assert_eq!(idx(&base.clone().variant("m-zero")), 2);
        assert_eq!(idx(&base.clone().variant("k-infinity")), 2);
        assert_eq!(idx(&base.clone().variant("k-infinity").param("d", 1.0)), 2);
        assert_eq!(idx(&base.variant("both")), 1);
    }

    #[test]
    fn two_mass_products() {
        let s = two_mass_system(1.0, 2.0);
        let (kp, ls) = s.pencil();
        #[rustfmt::skip]
        let kp_expect = Mat::from_row_slice(4, 4, &[
            0.0, 1.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 1.0 / 3.0,
            0.0, 0.0, 0.0, 0.0,
        ]);
        #[rustfmt::skip]
        let ls_expect = Mat::from_row_slice(4, 4, &[
            0.0, 0.0, 1.0, 1.0 / 3.0,
            0.0, 0.0, -0.5, 1.0 / 3.0,
            -1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, -0.5, 1.0 / 3.0,
        ]);
        assert_eq!(kp, kp_expect);
        assert_eq!(ls, ls_expect);
        assert_eq!(idx(&ModelSpec::new(ModelKind::TwoMass)), 2);
    }

    #[test]
    fn unconstrained_mechanics() {
        assert!(idx(&ModelSpec::new(ModelKind::Mechanical).param("constraints", 0.0)) <= 1);
    }

    #[test]
    fn rejects_bad_parameters() {
        let r = build(&ModelSpec::new(ModelKind::Msd).param("m", -1.0));
        assert!(matches!(r, Err(Error::InvalidParameters(_))));
        let r = build(&ModelSpec::new(ModelKind::Msd).variant("sideways"));
        assert!(matches!(r, Err(Error::InvalidParameters(_))));
    }
}

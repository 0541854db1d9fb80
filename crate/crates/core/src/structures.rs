//! Structured system classes, report-based validation and energy evaluation.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{
    check_finite, hstack, kernel_basis_abs, mat_serde, min_sym_eig, rank_abs, skew_part, solve,
    spectral_norm, sym_part, vstack, Mat, TolerancePolicy,
};

/// Image representation `x = P z`, `e = S z` with `P^T S = S^T P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangePair {
    #[serde(with = "mat_serde")]
    pub p: Mat,
    #[serde(with = "mat_serde")]
    pub s: Mat,
}

/// Kernel representation `K f + L e = 0` with `K L^T + L K^T = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiracPair {
    #[serde(with = "mat_serde")]
    pub k: Mat,
    #[serde(with = "mat_serde")]
    pub l: Mat,
}

/// Kernel representation of a maximally monotone subspace, `M N^T + N M^T >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonePair {
    #[serde(with = "mat_serde")]
    pub m: Mat,
    #[serde(with = "mat_serde")]
    pub n: Mat,
}

/// `E z' = (J - R) Q z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DHSystem {
    #[serde(with = "mat_serde")]
    pub e: Mat,
    #[serde(with = "mat_serde")]
    pub j: Mat,
    #[serde(with = "mat_serde")]
    pub r: Mat,
    #[serde(with = "mat_serde")]
    pub q: Mat,
}

/// `K P z' = L S z` built from a Dirac pair `(K, L)` and a Lagrange pair `(P, S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedHDAE {
    #[serde(with = "mat_serde")]
    pub k: Mat,
    #[serde(with = "mat_serde")]
    pub l: Mat,
    #[serde(with = "mat_serde")]
    pub p: Mat,
    #[serde(with = "mat_serde")]
    pub s: Mat,
}

/// `C P z' = D S z` where `[C D]` annihilates a monotone image `[N^T; M^T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneAnnihilatorSystem {
    #[serde(with = "mat_serde")]
    pub c: Mat,
    #[serde(with = "mat_serde")]
    pub d: Mat,
    #[serde(with = "mat_serde")]
    pub p: Mat,
    #[serde(with = "mat_serde")]
    pub s: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureKind {
    Lagrange,
    Dirac,
    Monotone,
    Dh,
    Extended,
    MonotoneAnnihilator,
}

impl StructureKind {
    pub fn required(&self) -> &'static [&'static str] {
        match self {
            StructureKind::Lagrange => &["P", "S"],
            StructureKind::Dirac => &["K", "L"],
            StructureKind::Monotone => &["M", "N"],
            StructureKind::Dh => &["E", "J", "R", "Q"],
            StructureKind::Extended => &["K", "L", "P", "S"],
            StructureKind::MonotoneAnnihilator => &["C", "D", "P", "S"],
        }
    }
}

impl std::str::FromStr for StructureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lagrange" => StructureKind::Lagrange,
            "dirac" => StructureKind::Dirac,
            "monotone" => StructureKind::Monotone,
            "dh" => StructureKind::Dh,
            "extended" => StructureKind::Extended,
            "monotone-annihilator" => StructureKind::MonotoneAnnihilator,
            other => return Err(Error::InvalidInput(format!("unknown structure kind '{other}'"))),
        })
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StructureKind::Lagrange => "lagrange",
            StructureKind::Dirac => "dirac",
            StructureKind::Monotone => "monotone",
            StructureKind::Dh => "dh",
            StructureKind::Extended => "extended",
            StructureKind::MonotoneAnnihilator => "monotone-annihilator",
        };
        f.write_str(s)
    }
}

/// One checked invariant. `value <= threshold` means it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub invariant: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ValidationReport {
    pub valid: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, invariant: impl Into<String>, value: f64, threshold: f64) {
        self.checks.push(Check {
            invariant: invariant.into(),
            value,
            threshold,
            passed: value <= threshold,
        });
    }

    fn extend(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }

    fn finish(mut self) -> Self {
        self.valid = self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn violations(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn dims(what: &str, cond: bool) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(what.to_string()))
    }
}

fn structure_thr(tol: &TolerancePolicy, scale: f64) -> f64 {
    tol.structure_tol * scale.max(1.0)
}

/// Full column rank deficit of `a`, judged relative to its own norm.
fn rank_deficit(a: &Mat, want: usize, tol: &TolerancePolicy) -> Result<f64> {
    let thr = tol.structural_threshold(a.nrows().max(a.ncols()), spectral_norm(a));
    let r = rank_abs(a, thr)?;
    Ok(want.saturating_sub(r) as f64)
}

fn psd_violation(a: &Mat) -> f64 {
    (-min_sym_eig(a)).max(0.0)
}

impl LagrangePair {
    pub fn new(p: Mat, s: Mat) -> Self {
        LagrangePair { p, s }
    }

    pub fn validate(&self, tol: &TolerancePolicy) -> Result<ValidationReport> {
        dims("P and S must have equal shape", self.p.shape() == self.s.shape())?;
        check_finite(&self.p, "P")?;
        check_finite(&self.s, "S")?;
        let mut rep = ValidationReport::default();
        let g = self.p.transpose() * &self.s;
        rep.push("P^T S symmetric", (&g - g.transpose()).norm(), structure_thr(tol, self.p.norm() * self.s.norm()));
        if self.p.nrows() == self.p.ncols() {
            let n = self.p.ncols();
            rep.push("rank [P; S] = n", rank_deficit(&vstack(&[&self.p, &self.s]), n, tol)?, 0.0);
        }
        Ok(rep.finish())
    }

    /// `S^T P >= 0`.
    pub fn is_nonnegative(&self, tol: &TolerancePolicy) -> bool {
        let g = self.s.transpose() * &self.p;
        psd_violation(&g) <= structure_thr(tol, g.norm())
    }

    pub fn hamiltonian(&self, v: &DVector<f64>, frame: Frame, tol: &TolerancePolicy) -> Result<f64> {
        hamiltonian_ps(&self.p, &self.s, v, frame, tol)
    }
}

impl DiracPair {
    pub fn new(k: Mat, l: Mat) -> Self {
        DiracPair { k, l }
    }

    pub fn validate(&self, tol: &TolerancePolicy) -> Result<ValidationReport> {
        dims("K and L must have equal shape", self.k.shape() == self.l.shape())?;
        check_finite(&self.k, "K")?;
        check_finite(&self.l, "L")?;
        let mut rep = ValidationReport::default();
        let g = &self.k * self.l.transpose();
        rep.push("K L^T + L K^T = 0", (&g + g.transpose()).norm(), structure_thr(tol, self.k.norm() * self.l.norm()));
        if self.k.nrows() == self.k.ncols() {
            let n = self.k.ncols();
            rep.push("rank [K L] = n", rank_deficit(&hstack(&[&self.k, &self.l]).transpose(), n, tol)?, 0.0);
        }
        Ok(rep.finish())
    }
}

impl MonotonePair {
    pub fn new(m: Mat, n: Mat) -> Self {
        MonotonePair { m, n }
    }

    pub fn validate(&self, tol: &TolerancePolicy) -> Result<ValidationReport> {
        let n = self.m.nrows();
        dims("M and N must be square of equal size", self.m.shape() == (n, n) && self.n.shape() == (n, n))?;
        check_finite(&self.m, "M")?;
        check_finite(&self.n, "N")?;
        let mut rep = ValidationReport::default();
        let g = &self.m * self.n.transpose();
        rep.push("M N^T + N M^T >= 0", psd_violation(&(&g + g.transpose())), structure_thr(tol, self.m.norm() * self.n.norm()));
        rep.push("rank [N M] = n", rank_deficit(&hstack(&[&self.n, &self.m]).transpose(), n, tol)?, 0.0);
        Ok(rep.finish())
    }
}

impl DHSystem {
    pub fn new(e: Mat, j: Mat, r: Mat, q: Mat) -> Self {
        DHSystem { e, j, r, q }
    }

    pub fn validate(&self, tol: &TolerancePolicy) -> Result<ValidationReport> {
        let l = self.e.nrows();
        dims("E and Q must have equal shape", self.e.shape() == self.q.shape())?;
        dims("J and R must be square matching the rows of E", self.j.shape() == (l, l) && self.r.shape() == (l, l))?;
        for (m, name) in [(&self.e, "E"), (&self.j, "J"), (&self.r, "R"), (&self.q, "Q")] {
            check_finite(m, name)?;
        }
        let mut rep = ValidationReport::default();
        rep.push("J skew-symmetric", (&self.j + self.j.transpose()).norm(), structure_thr(tol, self.j.norm()));
        rep.push("R symmetric", (&self.r - self.r.transpose()).norm(), structure_thr(tol, self.r.norm()));
        rep.push("R positive semidefinite", psd_violation(&self.r), structure_thr(tol, self.r.norm()));
        let g = self.e.transpose() * &self.q;
        rep.push("E^T Q symmetric", (&g - g.transpose()).norm(), structure_thr(tol, self.e.norm() * self.q.norm()));
        Ok(rep.finish())
    }

    /// `E` and `(J - R) Q`.
    pub fn pencil(&self) -> (Mat, Mat) {
        (self.e.clone(), (&self.j - &self.r) * &self.q)
    }

    pub fn hamiltonian(&self, v: &DVector<f64>, frame: Frame, tol: &TolerancePolicy) -> Result<f64> {
        hamiltonian_ps(&self.e, &self.q, v, frame, tol)
    }

    /// Algebraic dissipation `-(Qz)^T R (Qz)`.
    pub fn energy_rate(&self, z: &DVector<f64>) -> f64 {
        let qz = &self.q * z;
        -(qz.transpose() * &self.r * &qz)[(0, 0)]
    }
}

impl ExtendedHDAE {
    pub fn new(k: Mat, l: Mat, p: Mat, s: Mat) -> Self {
        ExtendedHDAE { k, l, p, s }
    }

    pub fn n(&self) -> usize {
        self.k.ncols()
    }

    pub fn dirac(&self) -> DiracPair {
        DiracPair::new(self.k.clone(), self.l.clone())
    }

    pub fn lagrange(&self) -> LagrangePair {
        LagrangePair::new(self.p.clone(), self.s.clone())
    }

    pub fn validate(&self, tol: &TolerancePolicy) -> Result<ValidationReport> {
        let n = self.k.nrows();
        for (m, name) in [(&self.k, "K"), (&self.l, "L"), (&self.p, "P"), (&self.s, "S")] {
            dims(&format!("{name} must be {n}x{n}"), m.shape() == (n, n))?;
        }
        let mut rep = self.dirac().validate(tol)?;
        rep.extend(self.lagrange().validate(tol)?);
        Ok(rep.finish())
    }

    /// `K P` and `L S`.
    pub fn pencil(&self) -> (Mat, Mat) {
        (&self.k * &self.p, &self.l * &self.s)
    }

    pub fn hamiltonian(&self, v: &DVector<f64>, frame: Frame, tol: &TolerancePolicy) -> Result<f64> {
        hamiltonian_ps(&self.p, &self.s, v, frame, tol)
    }
}

impl MonotoneAnnihilatorSystem {
    pub fn new(c: Mat, d: Mat, p: Mat, s: Mat) -> Self {
        MonotoneAnnihilatorSystem { c, d, p, s }
    }

    /// Monotone pair `(M, N)` whose image `[N^T; M^T]` is the kernel of `[C D]`.
    pub fn generating_pair(&self, tol: &TolerancePolicy) -> Result<MonotonePair> {
        let n = self.c.nrows();
        let cd = hstack(&[&self.c, &self.d]);
        let thr = tol.structural_threshold(2 * n, spectral_norm(&cd));
        let ker = kernel_basis_abs(&cd, thr);
        if ker.ncols() != n {
            return Err(Error::NotAnnihilator(format!("kernel of [C D] has dimension {} instead of {n}", ker.ncols())));
        }
        let nt = ker.rows(0, n).into_owned();
        let mt = ker.rows(n, n).into_owned();
        Ok(MonotonePair::new(mt.transpose(), nt.transpose()))
    }

    pub fn validate(&self, tol: &TolerancePolicy) -> Result<ValidationReport> {
        let n = self.c.nrows();
        for (m, name) in [(&self.c, "C"), (&self.d, "D"), (&self.p, "P"), (&self.s, "S")] {
            dims(&format!("{name} must be {n}x{n}"), m.shape() == (n, n))?;
            check_finite(m, name)?;
        }
        let mut rep = ValidationReport::default();
        let cd = hstack(&[&self.c, &self.d]);
        rep.push("rank [C D] = n", rank_deficit(&cd.transpose(), n, tol)?, 0.0);
        match self.generating_pair(tol) {
            Ok(pair) => rep.extend(pair.validate(tol)?),
            Err(_) => rep.push("kernel of [C D] has dimension n", 1.0, 0.0),
        }
        rep.extend(LagrangePair::new(self.p.clone(), self.s.clone()).validate(tol)?);
        Ok(rep.finish())
    }

    /// `C P` and `D S`.
    pub fn pencil(&self) -> (Mat, Mat) {
        (&self.c * &self.p, &self.d * &self.s)
    }
}

/// Validate named matrices as the given structure class.
pub fn validate(kind: StructureKind, matrices: &BTreeMap<String, Mat>, tol: &TolerancePolicy) -> Result<ValidationReport> {
    tol.validate()?;
    let get = |name: &str| -> Result<Mat> {
        matrices
            .get(name)
            .cloned()
            .ok_or_else(|| Error::DimensionMismatch(format!("missing matrix {name}")))
    };
    match kind {
        StructureKind::Lagrange => LagrangePair::new(get("P")?, get("S")?).validate(tol),
        StructureKind::Dirac => DiracPair::new(get("K")?, get("L")?).validate(tol),
        StructureKind::Monotone => MonotonePair::new(get("M")?, get("N")?).validate(tol),
        StructureKind::Dh => DHSystem::new(get("E")?, get("J")?, get("R")?, get("Q")?).validate(tol),
        StructureKind::Extended => ExtendedHDAE::new(get("K")?, get("L")?, get("P")?, get("S")?).validate(tol),
        StructureKind::MonotoneAnnihilator => {
            MonotoneAnnihilatorSystem::new(get("C")?, get("D")?, get("P")?, get("S")?).validate(tol)
        }
    }
}

/// `R = skew + sym` with `skew = (R - R^T)/2`, `sym = (R + R^T)/2`.
pub fn split_sym_skew(r: &Mat) -> Result<(Mat, Mat)> {
    dims("matrix must be square", r.nrows() == r.ncols())?;
    Ok((skew_part(r), sym_part(r)))
}

/// Coordinates in which a Hamiltonian is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Parameter `z`: `1/2 z^T S^T P z`.
    Z,
    /// State `x = P z`: `1/2 x^T S P^{-1} x`.
    X,
    /// Co-state `e = S z`: `1/2 e^T P S^{-1} e`.
    E,
}

impl std::str::FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(Frame::Z),
            "x" => Ok(Frame::X),
            "e" => Ok(Frame::E),
            other => Err(Error::InvalidInput(format!("unknown frame '{other}'"))),
        }
    }
}

fn invertible(a: &Mat, tol: &TolerancePolicy) -> Result<bool> {
    if a.nrows() != a.ncols() {
        return Ok(false);
    }
    Ok(crate::numkernel::rank_tol(a, tol)? == a.nrows())
}

/// Quadratic energy of an image pair `(P, S)` in the requested frame.
pub fn hamiltonian_ps(p: &Mat, s: &Mat, v: &DVector<f64>, frame: Frame, tol: &TolerancePolicy) -> Result<f64> {
    dims("P and S must have equal shape", p.shape() == s.shape())?;
    match frame {
        Frame::Z => {
            dims("vector length must match the columns of P", v.len() == p.ncols())?;
            let pz = p * v;
            let sz = s * v;
            Ok(0.5 * sz.dot(&pz))
        }
        Frame::X => {
            dims("vector length must match the rows of P", v.len() == p.nrows())?;
            if !invertible(p, tol)? {
                return Err(Error::SingularFrame("P"));
            }
            let z = solve(p, &Mat::from_column_slice(v.len(), 1, v.as_slice()), "P")?;
            let z = DVector::from_column_slice(z.as_slice());
            Ok(0.5 * (s * &z).dot(v))
        }
        Frame::E => {
            dims("vector length must match the rows of S", v.len() == s.nrows())?;
            if !invertible(s, tol)? {
                return Err(Error::SingularFrame("S"));
            }
            let z = solve(s, &Mat::from_column_slice(v.len(), 1, v.as_slice()), "S")?;
            let z = DVector::from_column_slice(z.as_slice());
            Ok(0.5 * (p * &z).dot(v))
        }
    }
}

//! Translations between representations of Hamiltonian DAEs.

mod subspace;

pub use subspace::{compose, pullback, pushforward, PairedSubspace, Representation, Wiring};

use serde::{Deserialize, Serialize};

use crate::analyze::{regularity, wong_sequences, Pencil};
use crate::condense::lagrange_condense;
use crate::error::{Error, Result};
use crate::numkernel::{
    assemble, cond, grid, hstack, inverse, left_annihilator_abs, mat_serde, rank_abs, rank_tol, spectral_norm,
    vstack, Mat, TolerancePolicy,
};
use crate::structures::{DHSystem, ExtendedHDAE, LagrangePair, MonotoneAnnihilatorSystem};

/// `ex * x' = ax * x`, possibly with more equations than unknowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitSystem {
    #[serde(with = "mat_serde")]
    pub ex: Mat,
    #[serde(with = "mat_serde")]
    pub ax: Mat,
}

impl ImplicitSystem {
    pub fn new(ex: Mat, ax: Mat) -> Result<Self> {
        if ex.shape() != ax.shape() {
            return Err(Error::DimensionMismatch("Ex and Ax must have equal shape".into()));
        }
        Ok(ImplicitSystem { ex, ax })
    }

    /// `[Ex | -Ax]`, whose row space determines the system.
    pub fn relation(&self) -> Mat {
        hstack(&[&self.ex, &(-&self.ax)])
    }

    /// Equality of the row spaces of `[Ex | -Ax]`.
    pub fn same_system(&self, other: &ImplicitSystem, tol: &TolerancePolicy) -> Result<bool> {
        if self.ex.ncols() != other.ex.ncols() {
            return Ok(false);
        }
        let a = self.relation();
        let b = other.relation();
        let scale = spectral_norm(&a).max(spectral_norm(&b)).max(1.0);
        let thr = tol.structural_threshold(a.ncols(), scale);
        let ra = rank_abs(&a, thr)?;
        let rb = rank_abs(&b, thr)?;
        Ok(ra == rb && rank_abs(&vstack(&[&a, &b]), thr)? == ra)
    }

    /// Same solution set for two regular square systems: equal finite
    /// deflating subspaces `V*` carrying the same flow. Systems that differ
    /// by differentiated constraints compare equal here but not under
    /// [`same_system`](Self::same_system).
    pub fn same_behaviour(&self, other: &ImplicitSystem, tol: &TolerancePolicy) -> Result<bool> {
        let p1 = Pencil::new(self.ex.clone(), self.ax.clone())?;
        let p2 = Pencil::new(other.ex.clone(), other.ax.clone())?;
        if p1.n() != p2.n() || !regularity(&p1, tol)?.regular || !regularity(&p2, tol)?.regular {
            return Ok(false);
        }
        let v1 = wong_sequences(&p1, tol)?.v_star;
        let v2 = wong_sequences(&p2, tol)?.v_star;
        if v1.ncols() != v2.ncols() {
            return Ok(false);
        }
        let k = v1.ncols();
        if k == 0 {
            return Ok(true);
        }
        let thr = tol.structural_threshold(p1.n(), 1.0);
        if rank_abs(&hstack(&[&v1, &v2]), thr)? != k {
            return Ok(false);
        }
        // flow on V*: E V F = A V
        let flow = |p: &Pencil| -> Result<Mat> {
            let ev = &p.e * &v1;
            let av = &p.a * &v1;
            ev.svd(true, true)
                .solve(&av, f64::EPSILON)
                .map_err(|e| Error::Numerical(e.to_string()))
        };
        let (f1, f2) = (flow(&p1)?, flow(&p2)?);
        let scale = f1.norm().max(f2.norm()).max(1.0);
        Ok((f1 - f2).norm() <= tol.structure_abs(scale) * 1e3)
    }
}

fn require_valid(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<()> {
    let rep = sys.validate(tol)?;
    if !rep.valid {
        let names: Vec<_> = rep.violations().map(|c| c.invariant.clone()).collect();
        return Err(Error::NotStructured(names.join("; ")));
    }
    Ok(())
}

/// `M K x' = N S^T x` with `[M N]` an orthonormal maximal annihilator of
/// `[L; -P^T]`.
pub fn to_x_representation(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<ImplicitSystem> {
    require_valid(sys, tol)?;
    let n = sys.n();
    let stacked = vstack(&[&sys.l, &(-sys.p.transpose())]);
    let thr = tol.structural_threshold(2 * n, spectral_norm(&stacked).max(1.0));
    let ann = left_annihilator_abs(&stacked, thr)?;
    let m = ann.columns(0, n).into_owned();
    let nn = ann.columns(n, n).into_owned();
    ImplicitSystem::new(&m * &sys.k, &nn * sys.s.transpose())
}

/// Annihilator blocks `(M, N)` used by [`to_x_representation`].
pub fn x_annihilator(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<(Mat, Mat)> {
    let n = sys.n();
    let stacked = vstack(&[&sys.l, &(-sys.p.transpose())]);
    let thr = tol.structural_threshold(2 * n, spectral_norm(&stacked).max(1.0));
    let ann = left_annihilator_abs(&stacked, thr)?;
    Ok((ann.columns(0, n).into_owned(), ann.columns(n, n).into_owned()))
}

fn invert_gate(m: &Mat, what: &'static str, tol: &TolerancePolicy, warnings: &mut Vec<String>) -> Result<Mat> {
    if rank_tol(m, tol)? < m.nrows() {
        return Err(Error::Singular(what));
    }
    let c = cond(m);
    if c > crate::condense::COND_WARN {
        warnings.push(format!("{what} has condition number {c:.3e}"));
    }
    inverse(m, what)
}

/// `K x' = L Q x` with `Q = S P^{-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KlqForm {
    #[serde(with = "mat_serde")]
    pub k: Mat,
    #[serde(with = "mat_serde")]
    pub l: Mat,
    #[serde(with = "mat_serde")]
    pub q: Mat,
    pub symmetry_residual: f64,
    pub warnings: Vec<String>,
}

pub fn to_klq(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<KlqForm> {
    let mut warnings = Vec::new();
    let p_inv = invert_gate(&sys.p, "P", tol, &mut warnings)?;
    let q = &sys.s * p_inv;
    Ok(KlqForm {
        k: sys.k.clone(),
        l: sys.l.clone(),
        symmetry_residual: (&q - q.transpose()).norm(),
        q,
        warnings,
    })
}

/// `x' = J Q x` with `J = K^{-1} L`, `Q = S P^{-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonForm {
    #[serde(with = "mat_serde")]
    pub j: Mat,
    #[serde(with = "mat_serde")]
    pub q: Mat,
    pub skew_residual: f64,
    pub symmetry_residual: f64,
    pub warnings: Vec<String>,
}

pub fn to_poisson(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<PoissonForm> {
    let mut warnings = Vec::new();
    let k_inv = invert_gate(&sys.k, "K", tol, &mut warnings)?;
    let p_inv = invert_gate(&sys.p, "P", tol, &mut warnings)?;
    let j = k_inv * &sys.l;
    let q = &sys.s * p_inv;
    Ok(PoissonForm {
        skew_residual: (&j + j.transpose()).norm(),
        symmetry_residual: (&q - q.transpose()).norm(),
        j,
        q,
        warnings,
    })
}

/// `P^T J x' = S^T x` with `J = L^{-1} K`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientForm {
    #[serde(with = "mat_serde")]
    pub j: Mat,
    #[serde(with = "mat_serde")]
    pub ex: Mat,
    #[serde(with = "mat_serde")]
    pub ax: Mat,
    pub skew_residual: f64,
    pub warnings: Vec<String>,
}

pub fn to_gradient(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<GradientForm> {
    let mut warnings = Vec::new();
    let l_inv = invert_gate(&sys.l, "L", tol, &mut warnings)?;
    let j = l_inv * &sys.k;
    Ok(GradientForm {
        ex: sys.p.transpose() * &j,
        ax: sys.s.transpose(),
        skew_residual: (&j + j.transpose()).norm(),
        j,
        warnings,
    })
}

/// `J x' = Q x` with `J = L^{-1} K`, `Q = S P^{-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymplecticForm {
    #[serde(with = "mat_serde")]
    pub j: Mat,
    #[serde(with = "mat_serde")]
    pub q: Mat,
    pub skew_residual: f64,
    pub symmetry_residual: f64,
    pub warnings: Vec<String>,
}

pub fn to_symplectic(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<SymplecticForm> {
    let g = to_gradient(sys, tol)?;
    let mut warnings = g.warnings;
    let p_inv = invert_gate(&sys.p, "P", tol, &mut warnings)?;
    let q = &sys.s * p_inv;
    Ok(SymplecticForm {
        skew_residual: g.skew_residual,
        symmetry_residual: (&q - q.transpose()).norm(),
        j: g.j,
        q,
        warnings,
    })
}

/// Adjoint system `P^T K^T v' = S^T L^T v`.
pub fn adjoint(sys: &ExtendedHDAE) -> ImplicitSystem {
    ImplicitSystem { ex: sys.p.transpose() * sys.k.transpose(), ax: sys.s.transpose() * sys.l.transpose() }
}

/// The factors `(P^T, S^T, K^T, L^T)` of the adjoint; applying this twice
/// returns the original factors.
pub fn adjoint_factors(sys: &ExtendedHDAE) -> ExtendedHDAE {
    ExtendedHDAE::new(sys.p.transpose(), sys.s.transpose(), sys.k.transpose(), sys.l.transpose())
}

/// `(C, D, P, S) = (I, J - R, E, Q)`.
pub fn dh_to_monotone(dh: &DHSystem, tol: &TolerancePolicy) -> Result<MonotoneAnnihilatorSystem> {
    let rep = dh.validate(tol)?;
    if !rep.valid {
        let names: Vec<_> = rep.violations().map(|c| c.invariant.clone()).collect();
        return Err(Error::NotStructured(names.join("; ")));
    }
    let n = dh.e.nrows();
    if dh.e.ncols() != n {
        return Err(Error::DimensionMismatch("E must be square".into()));
    }
    Ok(MonotoneAnnihilatorSystem::new(Mat::identity(n, n), &dh.j - &dh.r, dh.e.clone(), dh.q.clone()))
}

/// Extended system with the multipliers `e2` for the Lagrange constraint
/// `x2 = 0` as explicit unknowns.
///
/// Unknowns are `(x1, x2, e2)` in the coordinates `x = V [x1; x2]`; the
/// equations are the two block rows of `K V` and `L V^{-T}` plus `x2 = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplierSystem {
    #[serde(with = "mat_serde")]
    pub e: Mat,
    #[serde(with = "mat_serde")]
    pub a: Mat,
    pub n1: usize,
    pub n2: usize,
    #[serde(with = "mat_serde")]
    pub v: Mat,
    #[serde(with = "mat_serde")]
    pub w: Mat,
    /// `||V^T V - I||`; the splitting does not assume orthogonality.
    pub v_orthogonality: f64,
}

impl MultiplierSystem {
    /// Columns holding the multipliers `e2`.
    pub fn multiplier_columns(&self) -> std::ops::Range<usize> {
        self.n1 + self.n2..self.n1 + 2 * self.n2
    }

    /// Eliminates the multipliers and returns the system in `x`.
    pub fn eliminate_multipliers(&self, tol: &TolerancePolicy) -> Result<ImplicitSystem> {
        let n = self.n1 + self.n2;
        let b = self.a.columns(n, self.n2).into_owned();
        let thr = tol.structural_threshold(self.a.nrows(), spectral_norm(&b).max(1.0));
        let ann = left_annihilator_abs(&b, thr)?;
        let v_inv = inverse(&self.v, "V")?;
        ImplicitSystem::new(
            &ann * self.e.columns(0, n) * &v_inv,
            &ann * self.a.columns(0, n) * &v_inv,
        )
    }
}

pub fn with_multipliers(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<MultiplierSystem> {
    require_valid(sys, tol)?;
    let n = sys.n();
    let lc = lagrange_condense(&LagrangePair::new(sys.p.clone(), sys.s.clone()), tol)?;
    let b = lc.blocks;
    let n1 = b.m1 + b.m2 + b.m3;
    let n2 = b.m4;
    if n1 + n2 != n || b.n5 != 0 {
        return Err(Error::NotRegular);
    }
    let kv = &sys.k * &lc.v;
    let lv = &sys.l * lc.v_inv.transpose();
    let sz = [n1, n2];
    let s11 = grid(&lc.s_form, &sz, &sz, 0, 0);
    let rows = [n1, n2, n2];
    let cols = [n1, n2, n2];
    let e = assemble(
        &rows,
        &cols,
        &[(0, 0, grid(&kv, &sz, &sz, 0, 0)), (1, 0, grid(&kv, &sz, &sz, 1, 0))],
    );
    let a = assemble(
        &rows,
        &cols,
        &[
            (0, 0, grid(&lv, &sz, &sz, 0, 0) * &s11),
            (1, 0, grid(&lv, &sz, &sz, 1, 0) * &s11),
            (0, 2, grid(&lv, &sz, &sz, 0, 1)),
            (1, 2, grid(&lv, &sz, &sz, 1, 1)),
            (2, 1, Mat::identity(n2, n2)),
        ],
    );
    let v_orthogonality = (lc.v.transpose() * &lc.v - Mat::identity(n, n)).norm();
    Ok(MultiplierSystem { e, a, n1, n2, v: lc.v, w: lc.w, v_orthogonality })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn ex_b() -> ExtendedHDAE {
        ExtendedHDAE::new(
            Mat::identity(2, 2),
            dmatrix![0.0, 1.0; -1.0, 0.0],
            dmatrix![1.0, 0.0; 0.0, 0.0],
            Mat::identity(2, 2),
        )
    }

    #[test]
    fn x_representation_examples() {
        let x = to_x_representation(&ex_b(), &tol()).unwrap();
        let expect = ImplicitSystem::new(dmatrix![0.0, 0.0; 0.0, 1.0], dmatrix![0.0, 1.0; -1.0, 0.0]).unwrap();
        assert!(x.same_system(&expect, &tol()).unwrap());
        let zero_eq_x = ImplicitSystem::new(dmatrix![0.0], dmatrix![1.0]).unwrap();
        for p in [1.0, 0.0] {
            let sys = ExtendedHDAE::new(dmatrix![0.0], dmatrix![1.0], dmatrix![p], dmatrix![1.0]);
            assert!(to_x_representation(&sys, &tol()).unwrap().same_system(&zero_eq_x, &tol()).unwrap());
        }
    }

    #[test]
    fn degenerate_composition_is_rectangular() {
        let sys = ExtendedHDAE::new(dmatrix![1.0], dmatrix![0.0], dmatrix![0.0], dmatrix![1.0]);
        let x = to_x_representation(&sys, &tol()).unwrap();
        assert_eq!(x.ex.shape(), (2, 1));
        let expect = ImplicitSystem::new(dmatrix![1.0; 0.0], dmatrix![0.0; 1.0]).unwrap();
        assert!(x.same_system(&expect, &tol()).unwrap());
    }

    #[test]
    fn invertible_forms() {
        let msd = ExtendedHDAE::new(
            Mat::identity(2, 2),
            dmatrix![0.0, 1.0; -1.0, 0.0],
            Mat::identity(2, 2),
            dmatrix![3.0, 0.0; 0.0, 0.5],
        );
        let p = to_poisson(&msd, &tol()).unwrap();
        assert_eq!(p.j, dmatrix![0.0, 1.0; -1.0, 0.0]);
        assert_eq!(p.q, dmatrix![3.0, 0.0; 0.0, 0.5]);
        let sys = ExtendedHDAE::new(Mat::identity(2, 2), Mat::identity(2, 2), Mat::identity(2, 2) * 2.0, Mat::identity(2, 2));
        assert!((to_klq(&sys, &tol()).unwrap().q - Mat::identity(2, 2) * 0.5).norm() < 1e-15);
        let osc = ExtendedHDAE::new(Mat::identity(2, 2), dmatrix![0.0, 1.0; -1.0, 0.0], Mat::identity(2, 2), Mat::identity(2, 2));
        let s = to_symplectic(&osc, &tol()).unwrap();
        assert!((s.j - dmatrix![0.0, -1.0; 1.0, 0.0]).norm() < 1e-15);
        assert_eq!(s.q, Mat::identity(2, 2));
        let sing = ExtendedHDAE::new(Mat::identity(1, 1), dmatrix![0.0], dmatrix![1.0], dmatrix![1.0]);
        assert!(matches!(to_gradient(&sing, &tol()), Err(Error::Singular("L"))));
    }

    #[test]
    fn gradient_with_unit_l() {
        let k = dmatrix![0.0, 2.0; -2.0, 0.0];
        let sys = ExtendedHDAE::new(k.clone(), Mat::identity(2, 2), Mat::identity(2, 2), Mat::identity(2, 2));
        assert_eq!(to_gradient(&sys, &tol()).unwrap().j, k);
    }

    #[test]
    fn adjoint_examples() {
        let a = adjoint(&ex_b());
        assert_eq!(a.ex, dmatrix![1.0, 0.0; 0.0, 0.0]);
        assert_eq!(a.ax, dmatrix![0.0, -1.0; 1.0, 0.0]);
        let twice = adjoint_factors(&adjoint_factors(&ex_b()));
        assert_eq!(twice.pencil(), ex_b().pencil());
    }

    #[test]
    fn dh_bridge() {
        let dh = DHSystem::new(Mat::identity(2, 2), Mat::zeros(2, 2), Mat::identity(2, 2), Mat::identity(2, 2));
        let m = dh_to_monotone(&dh, &tol()).unwrap();
        assert_eq!(m.d, -Mat::identity(2, 2));
        assert!(m.validate(&tol()).unwrap().valid);
    }

    #[test]
    fn multipliers_ex_b() {
        let ms = with_multipliers(&ex_b(), &tol()).unwrap();
        assert_eq!((ms.n1, ms.n2), (1, 1));
        let x = to_x_representation(&ex_b(), &tol()).unwrap();
        let elim = ms.eliminate_multipliers(&tol()).unwrap();
        assert!(!elim.same_system(&x, &tol()).unwrap());
        assert!(elim.same_behaviour(&x, &tol()).unwrap());
        let id = ExtendedHDAE::new(Mat::identity(2, 2), dmatrix![0.0, 1.0; -1.0, 0.0], Mat::identity(2, 2), Mat::identity(2, 2));
        assert_eq!(with_multipliers(&id, &tol()).unwrap().n2, 0);
    }
}

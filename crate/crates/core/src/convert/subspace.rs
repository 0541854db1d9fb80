use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{
    hstack, image_basis_abs, kernel_basis_abs, mat_serde, min_sym_eig, rank_abs, spectral_norm, vstack, Mat,
    TolerancePolicy,
};
use crate::structures::{DiracPair, LagrangePair, MonotonePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// Column span of `[top; bottom]`.
    Image,
    /// `{(f, e) : top f + bottom e = 0}`.
    Kernel,
}

/// Subspace of a product space `F x E`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedSubspace {
    pub representation: Representation,
    #[serde(with = "mat_serde")]
    pub top: Mat,
    #[serde(with = "mat_serde")]
    pub bottom: Mat,
}

fn thr_for(m: &Mat, tol: &TolerancePolicy) -> f64 {
    tol.structural_threshold(m.nrows().max(m.ncols()), spectral_norm(m).max(1.0))
}

impl PairedSubspace {
    pub fn image(top: Mat, bottom: Mat) -> Result<Self> {
        if top.ncols() != bottom.ncols() {
            return Err(Error::DimensionMismatch("image blocks need equal column counts".into()));
        }
        Ok(PairedSubspace { representation: Representation::Image, top, bottom })
    }

    pub fn kernel(top: Mat, bottom: Mat) -> Result<Self> {
        if top.nrows() != bottom.nrows() {
            return Err(Error::DimensionMismatch("kernel blocks need equal row counts".into()));
        }
        Ok(PairedSubspace { representation: Representation::Kernel, top, bottom })
    }

    /// `{(f, e) : K f + L e = 0}`.
    pub fn from_dirac(d: &DiracPair) -> Result<Self> {
        Self::kernel(d.k.clone(), d.l.clone())
    }

    /// `{(P z, S z)}`.
    pub fn from_lagrange(l: &LagrangePair) -> Result<Self> {
        Self::image(l.p.clone(), l.s.clone())
    }

    /// `Img [N^T; M^T]`.
    pub fn from_monotone(m: &MonotonePair) -> Result<Self> {
        Self::image(m.n.transpose(), m.m.transpose())
    }

    /// `{(x, A x)}`.
    pub fn graph(a: &Mat) -> Result<Self> {
        Self::image(Mat::identity(a.ncols(), a.ncols()), a.clone())
    }

    pub fn flow_dim(&self) -> usize {
        match self.representation {
            Representation::Image => self.top.nrows(),
            Representation::Kernel => self.top.ncols(),
        }
    }

    pub fn effort_dim(&self) -> usize {
        match self.representation {
            Representation::Image => self.bottom.nrows(),
            Representation::Kernel => self.bottom.ncols(),
        }
    }

    /// Orthonormal image basis split into flow and effort rows.
    pub fn basis(&self, tol: &TolerancePolicy) -> (Mat, Mat) {
        let (nf, ne) = (self.flow_dim(), self.effort_dim());
        let b = match self.representation {
            Representation::Image => {
                let m = vstack(&[&self.top, &self.bottom]);
                image_basis_abs(&m, thr_for(&m, tol))
            }
            Representation::Kernel => {
                let m = hstack(&[&self.top, &self.bottom]);
                kernel_basis_abs(&m, thr_for(&m, tol))
            }
        };
        let k = b.ncols();
        (b.view((0, 0), (nf, k)).into_owned(), b.view((nf, 0), (ne, k)).into_owned())
    }

    pub fn dim(&self, tol: &TolerancePolicy) -> usize {
        self.basis(tol).0.ncols()
    }

    pub fn to_image(&self, tol: &TolerancePolicy) -> PairedSubspace {
        let (t, b) = self.basis(tol);
        PairedSubspace { representation: Representation::Image, top: t, bottom: b }
    }

    /// Orthonormal-row kernel description.
    pub fn to_kernel(&self, tol: &TolerancePolicy) -> Result<PairedSubspace> {
        let (t, b) = self.basis(tol);
        let m = vstack(&[&t, &b]);
        let ann = crate::numkernel::left_annihilator_abs(&m, thr_for(&m, tol))?;
        let nf = self.flow_dim();
        Ok(PairedSubspace {
            representation: Representation::Kernel,
            top: ann.columns(0, nf).into_owned(),
            bottom: ann.columns(nf, self.effort_dim()).into_owned(),
        })
    }

    /// Exchanges the two factors.
    pub fn swapped(&self) -> PairedSubspace {
        PairedSubspace { representation: self.representation, top: self.bottom.clone(), bottom: self.top.clone() }
    }

    /// Smallest eigenvalue of the pairing `e^T f` on an orthonormal basis;
    /// `+inf` for the zero subspace.
    pub fn monotone_margin(&self, tol: &TolerancePolicy) -> Result<f64> {
        if self.flow_dim() != self.effort_dim() {
            return Err(Error::DimensionMismatch("pairing needs equal flow and effort dimensions".into()));
        }
        let (t, b) = self.basis(tol);
        Ok(min_sym_eig(&(b.transpose() * t)))
    }

    /// Maximal monotone: dimension equals the flow dimension and the pairing
    /// is nonnegative up to `structure_tol`.
    pub fn is_maximal_monotone(&self, tol: &TolerancePolicy) -> Result<bool> {
        Ok(self.dim(tol) == self.flow_dim() && self.monotone_margin(tol)? >= -tol.structure_tol)
    }

    pub fn same_subspace(&self, other: &PairedSubspace, tol: &TolerancePolicy) -> Result<bool> {
        if self.flow_dim() != other.flow_dim() || self.effort_dim() != other.effort_dim() {
            return Ok(false);
        }
        let (t1, b1) = self.basis(tol);
        let (t2, b2) = other.basis(tol);
        let a = vstack(&[&t1, &b1]);
        let b = vstack(&[&t2, &b2]);
        if a.ncols() != b.ncols() {
            return Ok(false);
        }
        let both = hstack(&[&a, &b]);
        Ok(rank_abs(&both, thr_for(&both, tol))? == a.ncols())
    }
}

/// How two subspaces are joined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Wiring {
    /// Relations `A in U x V`, `B in V x W` give `{(u, w) : (u, v) in A, (v, w) in B}`.
    Relational,
    /// The last `shared` flow and effort coordinates of both operands form a
    /// port joined by `f_b = -f_a`, `e_b = e_a` and then hidden.
    Interconnect { shared: usize },
}

pub fn compose(a: &PairedSubspace, b: &PairedSubspace, wiring: Wiring, tol: &TolerancePolicy) -> Result<PairedSubspace> {
    let (at, ab) = a.basis(tol);
    let (bt, bb) = b.basis(tol);
    let (p, q) = (at.ncols(), bt.ncols());
    match wiring {
        Wiring::Relational => {
            if a.effort_dim() != b.flow_dim() {
                return Err(Error::DimensionMismatch("middle factors differ".into()));
            }
            let m = hstack(&[&ab, &(-&bt)]);
            let k = kernel_basis_abs(&m, thr_for(&m, tol));
            let top = &at * k.rows(0, p);
            let bottom = &bb * k.rows(p, q);
            Ok(PairedSubspace::image(top, bottom)?.to_image(tol))
        }
        Wiring::Interconnect { shared } => {
            for s in [a, b] {
                if s.flow_dim() != s.effort_dim() || s.flow_dim() < shared {
                    return Err(Error::DimensionMismatch("port does not fit the operands".into()));
                }
            }
            let (na, nb) = (a.flow_dim() - shared, b.flow_dim() - shared);
            let m = vstack(&[
                &hstack(&[&at.rows(na, shared).into_owned(), &bt.rows(nb, shared).into_owned()]),
                &hstack(&[&ab.rows(na, shared).into_owned(), &(-bb.rows(nb, shared).into_owned())]),
            ]);
            let k = kernel_basis_abs(&m, thr_for(&m, tol));
            let (ka, kb) = (k.rows(0, p).into_owned(), k.rows(p, q).into_owned());
            let top = vstack(&[&(at.rows(0, na) * &ka), &(bt.rows(0, nb) * &kb)]);
            let bottom = vstack(&[&(ab.rows(0, na) * &ka), &(bb.rows(0, nb) * &kb)]);
            Ok(PairedSubspace::image(top, bottom)?.to_image(tol))
        }
    }
}

/// `{(f, A^T g) : (A f, g) in M}` for `A : F -> G` and `M` in `G x G*`.
pub fn pullback(a: &Mat, m: &PairedSubspace, tol: &TolerancePolicy) -> Result<PairedSubspace> {
    if m.flow_dim() != a.nrows() {
        return Err(Error::DimensionMismatch("A maps into a space of the wrong dimension".into()));
    }
    let (t, b) = m.basis(tol);
    let nf = a.ncols();
    let x = hstack(&[a, &(-&t)]);
    let k = kernel_basis_abs(&x, thr_for(&x, tol));
    let top = k.rows(0, nf).into_owned();
    let bottom = a.transpose() * &b * k.rows(nf, t.ncols());
    Ok(PairedSubspace::image(top, bottom)?.to_image(tol))
}

/// `{(A f, g) : (f, A^T g) in M}` for `A : F -> G` and `M` in `F x F*`.
pub fn pushforward(a: &Mat, m: &PairedSubspace, tol: &TolerancePolicy) -> Result<PairedSubspace> {
    if m.flow_dim() != a.ncols() {
        return Err(Error::DimensionMismatch("A has the wrong domain".into()));
    }
    let (t, b) = m.basis(tol);
    let ng = a.nrows();
    let x = hstack(&[&a.transpose(), &(-&b)]);
    let k = kernel_basis_abs(&x, thr_for(&x, tol));
    let top = a * &t * k.rows(ng, t.ncols());
    let bottom = k.rows(0, ng).into_owned();
    Ok(PairedSubspace::image(top, bottom)?.to_image(tol))
}

use serde::{Deserialize, Serialize};

use super::{cond_warning, expected, ident};
use crate::error::{Error, Result};
use crate::numkernel::{block_diag, grid, mat_serde, set_block, skew_abs, spectral_norm, sub, svd, Mat, TolerancePolicy};
use crate::structures::DiracPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiracBlocks {
    pub l1: usize,
    pub l3: usize,
    pub l4: usize,
    pub n5: usize,
}

/// `U^T K V` and `U^T L V^{-T}` in skew canonical form.
///
/// Row blocks `[l1, l1, l3, l4, rest]`, column blocks
/// `[l1, l1, l3, l4, n5, rest]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiracCondensed {
    /// Left multiplier `U^T`.
    #[serde(with = "mat_serde")]
    pub ut: Mat,
    #[serde(with = "mat_serde")]
    pub v: Mat,
    /// `V^{-T}`, accumulated from the factors.
    #[serde(with = "mat_serde")]
    pub v_inv_t: Mat,
    pub blocks: DiracBlocks,
    #[serde(with = "mat_serde")]
    pub k_form: Mat,
    #[serde(with = "mat_serde")]
    pub l_form: Mat,
    pub residual_k: f64,
    pub residual_l: f64,
    pub warnings: Vec<String>,
}

impl DiracCondensed {
    pub fn row_sizes(&self) -> [usize; 5] {
        let b = self.blocks;
        let l = self.ut.nrows();
        [b.l1, b.l1, b.l3, b.l4, l - 2 * b.l1 - b.l3 - b.l4]
    }

    pub fn col_sizes(&self) -> [usize; 6] {
        let b = self.blocks;
        let n = self.v.nrows();
        [b.l1, b.l1, b.l3, b.l4, b.n5, n - 2 * b.l1 - b.l3 - b.l4 - b.n5]
    }
}

fn check_pair(pair: &DiracPair, tol: &TolerancePolicy) -> Result<()> {
    if pair.k.shape() != pair.l.shape() {
        return Err(Error::DimensionMismatch("K and L must have equal shape".into()));
    }
    crate::numkernel::check_finite(&pair.k, "K")?;
    crate::numkernel::check_finite(&pair.l, "L")?;
    let g = &pair.k * pair.l.transpose();
    let res = (&g + g.transpose()).norm();
    if res > tol.structure_tol * (pair.k.norm() * pair.l.norm()).max(1.0) {
        return Err(Error::NotDirac(res));
    }
    Ok(())
}

/// Orthogonal first two steps: `U^T K V = diag(Sigma, 0, 0)` and
/// `U^T L V = [[L11, L12, L13], [0, Sigma_2, 0], [0, 0, 0]]`.
struct OrthSteps {
    u: Mat,
    v: Mat,
    r: usize,
    l4: usize,
    sig: Mat,
    sig_2: Mat,
    thr: f64,
    thr_prod: f64,
}

fn orth_steps(pair: &DiracPair, tol: &TolerancePolicy) -> Result<OrthSteps> {
    let (l, n) = pair.k.shape();
    let sk = spectral_norm(&pair.k);
    let sl = spectral_norm(&pair.l);
    let dim = l.max(n);
    let thr = tol.structural_threshold(dim, sk.max(sl));
    let thr_prod = tol.structural_threshold(dim, sk * sl);
    let d1 = svd(&pair.k)?;
    let r = d1.rank_above(thr);
    let l1 = d1.u.transpose() * &pair.l * &d1.v;
    let d2 = svd(&sub(&l1, r, r, l - r, n - r))?;
    let l4 = d2.rank_above(thr);
    Ok(OrthSteps {
        u: &d1.u * block_diag(&[&ident(r), &d2.u]),
        v: &d1.v * block_diag(&[&ident(r), &d2.v]),
        r,
        l4,
        sig: Mat::from_diagonal(&d1.sigma.rows(0, r).into_owned()),
        sig_2: Mat::from_diagonal(&d2.sigma.rows(0, l4).into_owned()),
        thr,
        thr_prod,
    })
}

fn inv_diag(d: &Mat) -> Mat {
    Mat::from_diagonal(&d.diagonal().map(|v| 1.0 / v))
}

/// Skew canonical condensed form of a pair with `K L^T + L K^T = 0`.
pub fn dirac_condense(pair: &DiracPair, tol: &TolerancePolicy) -> Result<DiracCondensed> {
    tol.validate()?;
    check_pair(pair, tol)?;
    let (l, n) = pair.k.shape();
    let o = orth_steps(pair, tol)?;
    let (r, l4) = (o.r, o.l4);
    let lr = l - r - l4;
    let nr = n - r - l4;
    let mut warnings = Vec::new();
    let l_hat = o.u.transpose() * &pair.l * &o.v;
    let rows3 = [r, l4, lr];
    let cols3 = [r, l4, nr];
    let l11 = grid(&l_hat, &rows3, &cols3, 0, 0);
    let l12 = grid(&l_hat, &rows3, &cols3, 0, 1);
    let l13 = grid(&l_hat, &rows3, &cols3, 0, 2);

    cond_warning(&mut warnings, "step 3 (K scaling)", &o.sig);
    cond_warning(&mut warnings, "step 3 (L scaling)", &o.sig_2);
    let sig2_inv = inv_diag(&o.sig_2);
    let mut u3t = block_diag(&[&ident(r), &sig2_inv, &ident(lr)]);
    set_block(&mut u3t, 0, r, &(-(&l12 * &sig2_inv)));
    let v3 = block_diag(&[&inv_diag(&o.sig), &ident(l4), &ident(nr)]);
    let v3_inv_t = block_diag(&[&o.sig, &ident(l4), &ident(nr)]);

    let core = &l11 * &o.sig;
    let skew = skew_abs(&crate::numkernel::skew_part(&core), o.thr_prod);
    cond_warning(&mut warnings, "step 4 (congruence)", &skew.t);
    let t_inv_t = crate::numkernel::inverse(&skew.t, "congruence factor")?.transpose();
    let d3 = svd(&l13)?;
    let n5 = d3.rank_above(o.thr);
    let u4t = block_diag(&[&skew.t.transpose(), &ident(l4), &ident(lr)]);
    let v4 = block_diag(&[&t_inv_t, &ident(l4), &d3.v]);
    let v4_inv_t = block_diag(&[&skew.t, &ident(l4), &d3.v]);

    let ut = &u4t * &u3t * o.u.transpose();
    let v = &o.v * &v3 * &v4;
    let v_inv_t = &o.v * &v3_inv_t * &v4_inv_t;
    let k_form = &ut * &pair.k * &v;
    let l_form = &ut * &pair.l * &v_inv_t;
    let blocks = DiracBlocks { l1: skew.l, l3: r - 2 * skew.l, l4, n5 };
    let mut out = DiracCondensed {
        ut,
        v,
        v_inv_t,
        blocks,
        k_form,
        l_form,
        residual_k: 0.0,
        residual_l: 0.0,
        warnings,
    };
    let rows = out.row_sizes();
    let cols = out.col_sizes();
    let i1 = ident(rows[0]);
    let ke = expected(
        &out.k_form,
        &rows,
        &cols,
        &[(0, 0, i1.clone()), (1, 1, i1.clone()), (2, 2, ident(rows[2]))],
        &[],
    );
    let le = expected(
        &out.l_form,
        &rows,
        &cols,
        &[(0, 1, i1.clone()), (1, 0, -i1), (3, 3, ident(rows[3]))],
        &[(0, 4), (1, 4), (2, 4)],
    );
    out.residual_k = (&out.k_form - ke).norm();
    out.residual_l = (&out.l_form - le).norm();
    Ok(out)
}

/// Orthogonal staircase with sizes `(2 l1, l3, l4, n5)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiracStaircase {
    #[serde(with = "mat_serde")]
    pub u: Mat,
    #[serde(with = "mat_serde")]
    pub v: Mat,
    pub l12: usize,
    pub l3: usize,
    pub l4: usize,
    pub n5: usize,
    #[serde(with = "mat_serde")]
    pub k_form: Mat,
    #[serde(with = "mat_serde")]
    pub l_form: Mat,
    pub pattern_residual: f64,
    /// `||K11 L11^T + L11 K11^T||`.
    pub skew_residual: f64,
}

impl DiracStaircase {
    pub fn row_sizes(&self) -> [usize; 4] {
        let l = self.u.nrows();
        [self.l12, self.l3, self.l4, l - self.l12 - self.l3 - self.l4]
    }

    pub fn col_sizes(&self) -> [usize; 5] {
        let n = self.v.nrows();
        [self.l12, self.l3, self.l4, self.n5, n - self.l12 - self.l3 - self.l4 - self.n5]
    }
}

pub fn dirac_staircase_orth(pair: &DiracPair, tol: &TolerancePolicy) -> Result<DiracStaircase> {
    tol.validate()?;
    check_pair(pair, tol)?;
    let (l, n) = pair.k.shape();
    let o = orth_steps(pair, tol)?;
    let (r, l4) = (o.r, o.l4);
    let nr = n - r - l4;
    let l_hat = o.u.transpose() * &pair.l * &o.v;
    let rows3 = [r, l4, l - r - l4];
    let cols3 = [r, l4, nr];
    let d3 = svd(&grid(&l_hat, &rows3, &cols3, 0, 0))?;
    let l12 = d3.rank_above(o.thr);
    let l13 = d3.u.transpose() * grid(&l_hat, &rows3, &cols3, 0, 2);
    let d4 = svd(&l13)?;
    let n5 = d4.rank_above(o.thr);
    let u = &o.u * block_diag(&[&d3.u, &ident(l4), &ident(l - r - l4)]);
    let v = &o.v * block_diag(&[&d3.v, &ident(l4), &d4.v]);
    let k_form = u.transpose() * &pair.k * &v;
    let l_form = u.transpose() * &pair.l * &v;
    let rows = [l12, r - l12, l4, l - r - l4];
    let cols = [l12, r - l12, l4, n5, nr - n5];
    let ke = expected(&k_form, &rows, &cols, &[], &[(0, 0), (0, 1), (1, 1)]);
    let le = expected(&l_form, &rows, &cols, &[], &[(0, 0), (0, 2), (0, 3), (1, 2), (1, 3), (2, 2)]);
    let pattern_residual = ((&k_form - ke).norm_squared() + (&l_form - le).norm_squared()).sqrt();
    let k11 = grid(&k_form, &rows, &cols, 0, 0);
    let l11 = grid(&l_form, &rows, &cols, 0, 0);
    let g = &k11 * l11.transpose();
    Ok(DiracStaircase {
        u,
        v,
        l12,
        l3: r - l12,
        l4,
        n5,
        k_form,
        l_form,
        pattern_residual,
        skew_residual: (&g + g.transpose()).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn scalar_and_symplectic() {
        let c = dirac_condense(&DiracPair::new(dmatrix![1.0], dmatrix![0.0]), &tol()).unwrap();
        assert_eq!(c.blocks, DiracBlocks { l1: 0, l3: 1, l4: 0, n5: 0 });
        let c = dirac_condense(
            &DiracPair::new(Mat::identity(2, 2), dmatrix![0.0, 1.0; -1.0, 0.0]),
            &tol(),
        )
        .unwrap();
        assert_eq!(c.blocks, DiracBlocks { l1: 1, l3: 0, l4: 0, n5: 0 });
        assert!(c.residual_k < 1e-14 && c.residual_l < 1e-14);
    }

    #[test]
    fn scaled_skew_and_constraint() {
        let k = dmatrix![2.0, 0.0, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 0.0];
        let l = dmatrix![0.0, 6.0, 0.0; -3.0, 0.0, 0.0; 0.0, 0.0, 5.0];
        let c = dirac_condense(&DiracPair::new(k, l), &tol()).unwrap();
        assert_eq!(c.blocks, DiracBlocks { l1: 1, l3: 0, l4: 1, n5: 0 });
        assert!(c.residual_k < 1e-13 && c.residual_l < 1e-13, "{} {}", c.residual_k, c.residual_l);
    }

    #[test]
    fn rejects_non_dirac() {
        let r = dirac_condense(&DiracPair::new(Mat::identity(2, 2), Mat::identity(2, 2)), &tol());
        assert!(matches!(r, Err(Error::NotDirac(_))));
    }

    #[test]
    fn staircase_symplectic() {
        let s = dirac_staircase_orth(
            &DiracPair::new(Mat::identity(2, 2), dmatrix![0.0, 1.0; -1.0, 0.0]),
            &tol(),
        )
        .unwrap();
        assert_eq!((s.l12, s.l3, s.l4, s.n5), (2, 0, 0, 0));
        assert!(s.pattern_residual < 1e-14);
    }
}

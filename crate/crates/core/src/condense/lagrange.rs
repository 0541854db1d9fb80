use serde::{Deserialize, Serialize};

use super::{cond_warning, expected, ident};
use crate::error::{Error, Result};
use crate::numkernel::{
    block_diag, grid, mat_serde, rank_abs, signature_abs, spectral_norm, sub, svd, Mat, TolerancePolicy,
};
use crate::structures::LagrangePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagrangeBlocks {
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    pub m4: usize,
    pub n5: usize,
}

/// `V^{-1} P W` and `V^T S W` in the signature form.
///
/// Row blocks are `[m1, m2, m3, m4, n5, n6]`, column blocks
/// `[m1, m2, m3, m4, m5]`; `n6` and `m5` absorb the remaining dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LagrangeCondensed {
    #[serde(with = "mat_serde")]
    pub v: Mat,
    #[serde(with = "mat_serde")]
    pub v_inv: Mat,
    #[serde(with = "mat_serde")]
    pub w: Mat,
    pub blocks: LagrangeBlocks,
    #[serde(with = "mat_serde")]
    pub p_form: Mat,
    #[serde(with = "mat_serde")]
    pub s_form: Mat,
    pub residual_p: f64,
    pub residual_s: f64,
    pub warnings: Vec<String>,
}

impl LagrangeCondensed {
    pub fn row_sizes(&self) -> [usize; 6] {
        let b = self.blocks;
        let n = self.v.nrows();
        [b.m1, b.m2, b.m3, b.m4, b.n5, n - b.m1 - b.m2 - b.m3 - b.m4 - b.n5]
    }

    pub fn col_sizes(&self) -> [usize; 5] {
        let b = self.blocks;
        let m = self.w.nrows();
        [b.m1, b.m2, b.m3, b.m4, m - b.m1 - b.m2 - b.m3 - b.m4]
    }

    /// Row block 5 of the S form, `[S51 S52 S53]`.
    pub fn s5(&self) -> Mat {
        let r = self.row_sizes();
        let off = r[0] + r[1] + r[2] + r[3];
        sub(&self.s_form, off, 0, r[4], r[0] + r[1] + r[2])
    }
}

fn patterns(p_form: &Mat, s_form: &Mat, rows: &[usize], cols: &[usize]) -> (Mat, Mat) {
    let p = expected(
        p_form,
        rows,
        cols,
        &[(0, 0, ident(rows[0])), (1, 1, ident(rows[1])), (2, 2, ident(rows[2]))],
        &[],
    );
    let s = expected(
        s_form,
        rows,
        cols,
        &[(0, 0, ident(rows[0])), (1, 1, -ident(rows[1])), (3, 3, ident(rows[3]))],
        &[(4, 0), (4, 1), (4, 2)],
    );
    (p, s)
}

fn check_pair(pair: &LagrangePair, tol: &TolerancePolicy) -> Result<()> {
    if pair.p.shape() != pair.s.shape() {
        return Err(Error::DimensionMismatch("P and S must have equal shape".into()));
    }
    crate::numkernel::check_finite(&pair.p, "P")?;
    crate::numkernel::check_finite(&pair.s, "S")?;
    let g = pair.p.transpose() * &pair.s;
    let res = (&g - g.transpose()).norm();
    if res > tol.structure_tol * (pair.p.norm() * pair.s.norm()).max(1.0) {
        return Err(Error::NotLagrange(res));
    }
    Ok(())
}

/// Orthogonal steps shared by both Lagrange reductions: returns
/// `(V, W, r, m4, Sigma_r, Sigma_2)` with
/// `V^T P W = diag(Sigma_r, 0, 0)` and
/// `V^T S W = [[S11, 0, 0], [S21, Sigma_2, 0], [S31, 0, 0]]`.
struct OrthSteps {
    v: Mat,
    w: Mat,
    r: usize,
    m4: usize,
    sig_r: Mat,
    sig_2: Mat,
    thr: f64,
    thr_prod: f64,
}

fn orth_steps(pair: &LagrangePair, tol: &TolerancePolicy) -> Result<OrthSteps> {
    let (n, m) = pair.p.shape();
    let sp = spectral_norm(&pair.p);
    let ss = spectral_norm(&pair.s);
    let dim = n.max(m);
    let thr = tol.structural_threshold(dim, sp.max(ss));
    let thr_prod = tol.structural_threshold(dim, sp * ss);

    let d1 = svd(&pair.p)?;
    let r = d1.rank_above(thr);
    let s1 = d1.u.transpose() * &pair.s * &d1.v;
    let s22 = sub(&s1, r, r, n - r, m - r);
    let d2 = svd(&s22)?;
    let m4 = d2.rank_above(thr);
    let v = &d1.u * block_diag(&[&ident(r), &d2.u]);
    let w = &d1.v * block_diag(&[&ident(r), &d2.v]);
    let sig_r = Mat::from_diagonal(&d1.sigma.rows(0, r).into_owned());
    let sig_2 = Mat::from_diagonal(&d2.sigma.rows(0, m4).into_owned());
    Ok(OrthSteps { v, w, r, m4, sig_r, sig_2, thr, thr_prod })
}

/// Signature condensed form of a pair with `P^T S = S^T P`.
pub fn lagrange_condense(pair: &LagrangePair, tol: &TolerancePolicy) -> Result<LagrangeCondensed> {
    tol.validate()?;
    check_pair(pair, tol)?;
    let (n, m) = pair.p.shape();
    let o = orth_steps(pair, tol)?;
    let (r, m4) = (o.r, o.m4);
    let nr = n - r - m4;
    let mr = m - r - m4;
    let mut warnings = Vec::new();

    let s_hat = o.v.transpose() * &pair.s * &o.w;
    let rows3 = [r, m4, nr];
    let cols3 = [r, m4, mr];
    let s21 = grid(&s_hat, &rows3, &cols3, 1, 0);
    let s11 = grid(&s_hat, &rows3, &cols3, 0, 0);
    let s31 = grid(&s_hat, &rows3, &cols3, 2, 0);

    // Diagonal scaling: V3 = diag(Sigma_r, Sigma_2^{-1}, I), W3 eliminates S21.
    cond_warning(&mut warnings, "step 3 (P scaling)", &o.sig_r);
    cond_warning(&mut warnings, "step 3 (S scaling)", &o.sig_2);
    let sig2_inv = inv_diag(&o.sig_2);
    let sigr_inv = inv_diag(&o.sig_r);
    let v3 = block_diag(&[&o.sig_r, &sig2_inv, &ident(nr)]);
    let v3_inv = block_diag(&[&sigr_inv, &o.sig_2, &ident(nr)]);
    let mut w3 = ident(m);
    crate::numkernel::set_block(&mut w3, r, 0, &(-(&sig2_inv * &s21)));

    // Signature of the symmetric core and row compression of S31.
    let s_core = &o.sig_r * &s11;
    let sig = signature_abs(&crate::numkernel::sym_part(&s_core), o.thr_prod);
    cond_warning(&mut warnings, "step 4 (congruence)", &sig.t);
    let t_inv = crate::numkernel::inverse(&sig.t, "congruence factor").unwrap_or_else(|_| sig.t.transpose());
    let d3 = svd(&s31)?;
    let n5 = d3.rank_above(o.thr);
    let v4 = block_diag(&[&sig.t, &ident(m4), &d3.u]);
    let v4_inv = block_diag(&[&t_inv, &ident(m4), &d3.u.transpose()]);
    let w4 = block_diag(&[&sig.t, &ident(m4), &ident(mr)]);

    let v = &o.v * &v3 * &v4;
    let v_inv = &v4_inv * &v3_inv * o.v.transpose();
    let w = &o.w * &w3 * &w4;
    let p_form = &v_inv * &pair.p * &w;
    let s_form = v.transpose() * &pair.s * &w;
    let blocks = LagrangeBlocks { m1: sig.p, m2: sig.q, m3: sig.z, m4, n5 };
    let mut out = LagrangeCondensed {
        v,
        v_inv,
        w,
        blocks,
        p_form,
        s_form,
        residual_p: 0.0,
        residual_s: 0.0,
        warnings,
    };
    let (pe, se) = patterns(&out.p_form, &out.s_form, &out.row_sizes(), &out.col_sizes());
    out.residual_p = (&out.p_form - pe).norm();
    out.residual_s = (&out.s_form - se).norm();
    if rank_abs(&out.s5(), o.thr)? != n5 {
        out.warnings.push("row block 5 lost full row rank after scaling".into());
    }
    Ok(out)
}

fn inv_diag(d: &Mat) -> Mat {
    Mat::from_diagonal(&d.diagonal().map(|v| 1.0 / v))
}

/// Orthogonal staircase: sizes `(m1 + m2, m3, m4, n5)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LagrangeStaircase {
    #[serde(with = "mat_serde")]
    pub v: Mat,
    #[serde(with = "mat_serde")]
    pub w: Mat,
    pub m12: usize,
    pub m3: usize,
    pub m4: usize,
    pub n5: usize,
    #[serde(with = "mat_serde")]
    pub p_form: Mat,
    #[serde(with = "mat_serde")]
    pub s_form: Mat,
    /// Norm of the entries that the pattern requires to vanish.
    pub pattern_residual: f64,
    /// `||P11^T S11 - S11^T P11||`.
    pub symmetry_residual: f64,
}

impl LagrangeStaircase {
    pub fn row_sizes(&self) -> [usize; 5] {
        let n = self.v.nrows();
        [self.m12, self.m3, self.m4, self.n5, n - self.m12 - self.m3 - self.m4 - self.n5]
    }

    pub fn col_sizes(&self) -> [usize; 4] {
        let m = self.w.nrows();
        [self.m12, self.m3, self.m4, m - self.m12 - self.m3 - self.m4]
    }
}

pub fn lagrange_staircase_orth(pair: &LagrangePair, tol: &TolerancePolicy) -> Result<LagrangeStaircase> {
    tol.validate()?;
    check_pair(pair, tol)?;
    let (n, m) = pair.p.shape();
    let o = orth_steps(pair, tol)?;
    let (r, m4) = (o.r, o.m4);
    let nr = n - r - m4;
    let mr = m - r - m4;
    let s_hat = o.v.transpose() * &pair.s * &o.w;
    let rows3 = [r, m4, nr];
    let cols3 = [r, m4, mr];
    let s11 = grid(&s_hat, &rows3, &cols3, 0, 0);
    let d3 = svd(&s11)?;
    let m12 = d3.rank_above(o.thr);
    let s31 = grid(&s_hat, &rows3, &cols3, 2, 0) * &d3.v;
    let d4 = svd(&s31)?;
    let n5 = d4.rank_above(o.thr);
    let v = &o.v * block_diag(&[&d3.u, &ident(m4), &d4.u]);
    let w = &o.w * block_diag(&[&d3.v, &ident(m4), &ident(mr)]);
    let p_form = v.transpose() * &pair.p * &w;
    let s_form = v.transpose() * &pair.s * &w;
    let m3 = r - m12;
    let rows = [m12, m3, m4, n5, n - r - m4 - n5];
    let cols = [m12, m3, m4, mr];
    let pe = expected(&p_form, &rows, &cols, &[], &[(0, 0), (1, 0), (1, 1)]);
    let se = expected(&s_form, &rows, &cols, &[], &[(0, 0), (2, 0), (2, 1), (2, 2), (3, 0), (3, 1)]);
    let pattern_residual = ((&p_form - pe).norm_squared() + (&s_form - se).norm_squared()).sqrt();
    let p11 = grid(&p_form, &rows, &cols, 0, 0);
    let s11 = grid(&s_form, &rows, &cols, 0, 0);
    let g = p11.transpose() * &s11;
    Ok(LagrangeStaircase {
        v,
        w,
        m12,
        m3,
        m4,
        n5,
        p_form,
        s_form,
        pattern_residual,
        symmetry_residual: (&g - g.transpose()).norm(),
    })
}

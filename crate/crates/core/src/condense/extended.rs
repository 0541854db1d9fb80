use serde::{Deserialize, Serialize};

use super::{cond_warning, expected, ident};
use crate::analyze::{regularity, Pencil};
use crate::error::{Error, Result};
use crate::numkernel::{
    block_diag, grid, inverse, mat_serde, set_block, spectral_norm, svd, sym_part, Mat, TolerancePolicy,
};
use crate::structures::{Check, DiracPair, ExtendedHDAE, LagrangePair, MonotoneAnnihilatorSystem};

use super::{dirac_condense, lagrange_condense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtendedVariant {
    LagrangeFirst,
    DiracFirst,
    Monotone,
}

impl std::str::FromStr for ExtendedVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lagrange-first" => Ok(Self::LagrangeFirst),
            "dirac-first" => Ok(Self::DiracFirst),
            "monotone" => Ok(Self::Monotone),
            _ => Err(Error::InvalidInput(format!("unknown variant '{s}'"))),
        }
    }
}

/// Two-block condensed extended system.
///
/// `first = U^T K V`, `second = U^T L V^{-T}`, `p = V^{-1} P W`,
/// `s = V^T S W`. For the monotone variant `first`/`second` hold the
/// transformed `C`/`D`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtendedCondensed {
    pub variant: ExtendedVariant,
    #[serde(with = "mat_serde")]
    pub ut: Mat,
    #[serde(with = "mat_serde")]
    pub v: Mat,
    #[serde(with = "mat_serde")]
    pub v_inv: Mat,
    #[serde(with = "mat_serde")]
    pub w: Mat,
    pub n1: usize,
    pub n2: usize,
    #[serde(with = "mat_serde")]
    pub first: Mat,
    #[serde(with = "mat_serde")]
    pub second: Mat,
    #[serde(with = "mat_serde")]
    pub p: Mat,
    #[serde(with = "mat_serde")]
    pub s: Mat,
    /// Deviation from the prescribed block pattern.
    pub residual: f64,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ExtendedCondensed {
    fn sizes(&self) -> [usize; 2] {
        [self.n1, self.n2]
    }

    pub fn block(&self, which: &str, i: usize, j: usize) -> Mat {
        let m = match which {
            "first" => &self.first,
            "second" => &self.second,
            "p" => &self.p,
            _ => &self.s,
        };
        grid(m, &self.sizes(), &self.sizes(), i, j)
    }

    fn finish(mut self, tol: &TolerancePolicy, scale: f64) -> Self {
        let sz = self.sizes();
        let (i1, i2) = (ident(sz[0]), ident(sz[1]));
        let e = |m: &Mat, fixed: &[(usize, usize, Mat)], free: &[(usize, usize)]| {
            (m - expected(m, &sz, &sz, fixed, free)).norm_squared()
        };
        let all = [(0, 0), (0, 1), (1, 0), (1, 1)];
        let r = match self.variant {
            ExtendedVariant::LagrangeFirst => {
                e(&self.first, &[], &all)
                    + e(&self.second, &[(1, 1, i2.clone())], &[(0, 0)])
                    + e(&self.p, &[(0, 0, i1.clone())], &[])
                    + e(&self.s, &[(1, 1, i2.clone())], &[(0, 0)])
            }
            ExtendedVariant::DiracFirst => {
                e(&self.first, &[(0, 0, i1.clone())], &[])
                    + e(&self.second, &[(1, 1, i2.clone())], &[(0, 0)])
                    + e(&self.p, &[], &all)
                    + e(&self.s, &[(1, 1, i2.clone())], &[(0, 0)])
            }
            ExtendedVariant::Monotone => {
                e(&self.first, &[(1, 1, i2.clone())], &[(0, 0)])
                    + e(&self.second, &[(0, 0, i1.clone())], &[])
                    + e(&self.p, &[(1, 1, i2.clone())], &[(0, 0), (0, 1)])
                    + e(&self.s, &[], &all)
            }
        };
        self.residual = r.sqrt();
        let thr = tol.structure_abs(scale);
        let mut check = |name: &str, value: f64| {
            self.checks.push(Check { invariant: name.into(), value, threshold: thr, passed: value <= thr });
        };
        let p11 = grid(&self.p, &sz, &sz, 0, 0);
        let s11 = grid(&self.s, &sz, &sz, 0, 0);
        let a11 = grid(&self.first, &sz, &sz, 0, 0);
        let b11 = grid(&self.second, &sz, &sz, 0, 0);
        let ps = p11.transpose() * &s11;
        check("P11^T S11 symmetric", (&ps - ps.transpose()).norm());
        match self.variant {
            ExtendedVariant::LagrangeFirst => {
                let g = &a11 * b11.transpose();
                check("K11 L11^T + L11 K11^T = 0", (&g + g.transpose()).norm());
            }
            ExtendedVariant::DiracFirst => {
                check("L11 skew-symmetric", (&b11 + b11.transpose()).norm());
            }
            ExtendedVariant::Monotone => {
                let top = if sz[0] == 0 { 0.0 } else { -crate::numkernel::min_sym_eig(&(-sym_part(&a11))) };
                check("C11 + C11^T <= 0", top.max(0.0));
            }
        }
        self
    }
}

/// Two-block condensed form of a regular extended system.
pub fn extended_condense(
    sys: &ExtendedHDAE,
    variant: ExtendedVariant,
    tol: &TolerancePolicy,
) -> Result<ExtendedCondensed> {
    tol.validate()?;
    let n = sys.n();
    for (name, m) in [("K", &sys.k), ("L", &sys.l), ("P", &sys.p), ("S", &sys.s)] {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("{name} must be {n}x{n}")));
        }
    }
    let (e, a) = sys.pencil();
    if !regularity(&Pencil::new(e, a)?, tol)?.regular {
        return Err(Error::NotRegular);
    }
    let scale = [&sys.k, &sys.l, &sys.p, &sys.s].iter().map(|m| spectral_norm(m)).fold(1.0, f64::max);
    let out = match variant {
        ExtendedVariant::LagrangeFirst => lagrange_first(sys, tol)?,
        ExtendedVariant::DiracFirst => dirac_first(sys, tol)?,
        ExtendedVariant::Monotone => {
            return Err(Error::InvalidInput("the monotone variant takes a monotone annihilator system".into()))
        }
    };
    Ok(out.finish(tol, scale * scale))
}

/// `[0; I]`-reduction of a full column rank `x` (n x k): returns the row
/// permuted `U^T` with `U^T x = [0; R]` and `R^{-1}`.
fn bottom_compress(x: &Mat, thr: f64) -> Result<(Mat, Mat, Mat)> {
    let (n, k) = x.shape();
    let d = svd(x)?;
    if d.rank_above(thr) != k {
        return Err(Error::NotRegular);
    }
    let mut ut = Mat::zeros(n, n);
    set_block(&mut ut, 0, 0, &d.u.columns(k, n - k).transpose());
    set_block(&mut ut, n - k, 0, &d.u.columns(0, k).transpose());
    let sig = Mat::from_diagonal(&d.sigma.rows(0, k).into_owned());
    let r = &sig * d.v.transpose();
    let r_inv = &d.v * Mat::from_diagonal(&d.sigma.rows(0, k).map(|s| 1.0 / s));
    Ok((ut, r, r_inv))
}

fn lagrange_first(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<ExtendedCondensed> {
    let n = sys.n();
    let lc = lagrange_condense(&LagrangePair::new(sys.p.clone(), sys.s.clone()), tol)?;
    let b = lc.blocks;
    let n1 = b.m1 + b.m2 + b.m3;
    let n2 = b.m4;
    if n1 + n2 != n || b.n5 != 0 {
        return Err(Error::NotRegular);
    }
    let mut warnings = lc.warnings.clone();
    let thr = tol.structural_threshold(n, spectral_norm(&sys.l).max(spectral_norm(&sys.k)));
    let l1 = &sys.l * lc.v_inv.transpose();
    let x = l1.columns(n1, n2).into_owned();
    let (u2t, r, r_inv) = bottom_compress(&x, thr * cond_scale(&lc.v_inv))?;
    cond_warning(&mut warnings, "step 2 (L column block)", &r);
    let v2 = block_diag(&[&ident(n1), &r.transpose()]);
    let v2_inv = block_diag(&[&ident(n1), &r_inv.transpose()]);
    let w2 = block_diag(&[&ident(n1), &r_inv]);

    let l2 = &u2t * &l1 * v2_inv.transpose();
    let l21 = grid(&l2, &[n1, n2], &[n1, n2], 1, 0);
    let s11 = grid(&lc.s_form, &[n1, n2], &[n1, n2], 0, 0);
    let mut v3 = ident(n);
    set_block(&mut v3, 0, n1, &l21.transpose());
    let mut v3_inv = ident(n);
    set_block(&mut v3_inv, 0, n1, &(-l21.transpose()));
    let mut w3 = ident(n);
    set_block(&mut w3, n1, 0, &(-(&l21 * &s11)));

    let v = &lc.v * &v2 * &v3;
    let v_inv = &v3_inv * &v2_inv * &lc.v_inv;
    let w = &lc.w * &w2 * &w3;
    Ok(assemble(sys.k.clone(), sys.l.clone(), sys.p.clone(), sys.s.clone(), ExtendedVariant::LagrangeFirst, u2t, v, v_inv, w, n1, n2, warnings))
}

fn dirac_first(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<ExtendedCondensed> {
    let n = sys.n();
    let dc = dirac_condense(&DiracPair::new(sys.k.clone(), sys.l.clone()), tol)?;
    let b = dc.blocks;
    let n1 = 2 * b.l1 + b.l3;
    let n2 = b.l4;
    if n1 + n2 != n || b.n5 != 0 {
        return Err(Error::NotRegular);
    }
    let mut warnings = dc.warnings.clone();
    let v1_inv = dc.v_inv_t.transpose();
    let s1 = dc.v.transpose() * &sys.s;
    let y = s1.rows(n1, n2).into_owned();
    let thr = tol.structural_threshold(n, spectral_norm(&sys.s).max(spectral_norm(&sys.p)));
    // Column compression of Y moved to the right: Y W2 = [0, R].
    let (w2t, r_t, _) = bottom_compress(&y.transpose(), thr * cond_scale(&dc.v))?;
    let w2 = w2t.transpose();
    let r = r_t.transpose();
    cond_warning(&mut warnings, "step 2 (S row block)", &r);
    let r_inv = inverse(&r, "S row block")?;
    // V2 = diag(I, R^{-T}) so that V2^T Y W2 = [0, I].
    let v2 = block_diag(&[&ident(n1), &r_inv.transpose()]);
    let v2_inv = block_diag(&[&ident(n1), &r.transpose()]);
    let u2t = block_diag(&[&ident(n1), &r_inv]);

    let s2 = v2.transpose() * &s1 * &w2;
    let s12 = grid(&s2, &[n1, n2], &[n1, n2], 0, 1);
    let l11 = grid(&dc.l_form, &[n1, n2], &[n1, n2], 0, 0);
    let mut v3 = ident(n);
    set_block(&mut v3, n1, 0, &(-s12.transpose()));
    let mut v3_inv = ident(n);
    set_block(&mut v3_inv, n1, 0, &s12.transpose());
    let mut u3t = ident(n);
    set_block(&mut u3t, 0, n1, &(-(&l11 * &s12)));

    let ut = &u3t * &u2t * &dc.ut;
    let v = &dc.v * &v2 * &v3;
    let v_inv = &v3_inv * &v2_inv * &v1_inv;
    Ok(assemble(sys.k.clone(), sys.l.clone(), sys.p.clone(), sys.s.clone(), ExtendedVariant::DiracFirst, ut, v, v_inv, w2, n1, n2, warnings))
}

fn cond_scale(m: &Mat) -> f64 {
    spectral_norm(m).max(1.0)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    k: Mat,
    l: Mat,
    p: Mat,
    s: Mat,
    variant: ExtendedVariant,
    ut: Mat,
    v: Mat,
    v_inv: Mat,
    w: Mat,
    n1: usize,
    n2: usize,
    warnings: Vec<String>,
) -> ExtendedCondensed {
    let first = &ut * k * &v;
    let second = &ut * l * v_inv.transpose();
    let p = &v_inv * p * &w;
    let s = v.transpose() * s * &w;
    ExtendedCondensed {
        variant,
        ut,
        v,
        v_inv,
        w,
        n1,
        n2,
        first,
        second,
        p,
        s,
        residual: 0.0,
        checks: Vec::new(),
        warnings,
    }
}

/// Two-block form of a regular monotone annihilator system:
/// `C = diag(C11, I)`, `D = diag(I, 0)`, `P = [[P11, P12], [0, I]]`.
pub fn monotone_condense(sys: &MonotoneAnnihilatorSystem, tol: &TolerancePolicy) -> Result<ExtendedCondensed> {
    tol.validate()?;
    let n = sys.c.nrows();
    for (name, m) in [("C", &sys.c), ("D", &sys.d), ("P", &sys.p), ("S", &sys.s)] {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("{name} must be {n}x{n}")));
        }
    }
    let (e, a) = sys.pencil();
    if !regularity(&Pencil::new(e, a)?, tol)?.regular {
        return Err(Error::NotRegular);
    }
    let scale = [&sys.c, &sys.d, &sys.p, &sys.s].iter().map(|m| spectral_norm(m)).fold(1.0, f64::max);
    let thr = tol.structural_threshold(n, scale);
    let mut warnings = Vec::new();

    let d1 = svd(&sys.d)?;
    let n1 = d1.rank_above(thr);
    let n2 = n - n1;
    let sig = Mat::from_diagonal(&d1.sigma.rows(0, n1).into_owned());
    cond_warning(&mut warnings, "step 1 (D scaling)", &sig);
    let sig_inv = Mat::from_diagonal(&d1.sigma.rows(0, n1).map(|s| 1.0 / s));
    let u1t = block_diag(&[&sig_inv, &ident(n2)]) * d1.u.transpose();
    let v1 = d1.v.clone();
    let c1 = &u1t * &sys.c * &v1;
    let sz = [n1, n2];
    let c12 = grid(&c1, &sz, &sz, 0, 1);
    let c21 = grid(&c1, &sz, &sz, 1, 0);
    let c22 = grid(&c1, &sz, &sz, 1, 1);
    if c21.norm() > tol.structure_abs(spectral_norm(&c1)) {
        return Err(Error::NotAnnihilator(format!("C21 = {:.3e} does not vanish", c21.norm())));
    }
    cond_warning(&mut warnings, "step 2 (C22)", &c22);
    let c22_inv = inverse(&c22, "C22")
        .map_err(|_| Error::NotAnnihilator("C22 is singular".into()))?;
    let mut u2t = block_diag(&[&ident(n1), &c22_inv]);
    set_block(&mut u2t, 0, n1, &(-(&c12 * &c22_inv)));

    let p1 = v1.transpose() * &sys.p;
    let prow = p1.rows(n1, n2).into_owned();
    let (wt, r_t, _) = bottom_compress(&prow.transpose(), thr)?;
    let r = r_t.transpose();
    cond_warning(&mut warnings, "step 3 (P row block)", &r);
    let w = wt.transpose() * block_diag(&[&ident(n1), &inverse(&r, "P row block")?]);
    let ut = &u2t * &u1t;
    let v_inv = v1.transpose();
    let out = assemble(
        sys.c.clone(),
        sys.d.clone(),
        sys.p.clone(),
        sys.s.clone(),
        ExtendedVariant::Monotone,
        ut,
        v1,
        v_inv,
        w,
        n1,
        n2,
        warnings,
    );
    Ok(out.finish(tol, scale * scale))
}

/// Reduced system on the first `n1` coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReducedSystem {
    /// `K11 P11 z1' = L11 S11 z1`.
    Extended(ExtendedHDAE),
    /// `C11 P11 z1' = S11 z1 + S12 z2`.
    Monotone {
        #[serde(with = "mat_serde")]
        c11: Mat,
        #[serde(with = "mat_serde")]
        p11: Mat,
        #[serde(with = "mat_serde")]
        s11: Mat,
        #[serde(with = "mat_serde")]
        s12: Mat,
    },
}

/// Relation satisfied by the second coordinate block `z2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Constraint {
    /// `z2 = K21 z1'`.
    Derivative {
        #[serde(with = "mat_serde")]
        k21: Mat,
    },
    /// `z2 = 0`.
    Zero,
    /// `z2' = 0`.
    Constant,
}

pub fn extract_reduced(c: &ExtendedCondensed) -> (ReducedSystem, Constraint) {
    let n1 = c.n1;
    match c.variant {
        ExtendedVariant::LagrangeFirst => (
            ReducedSystem::Extended(ExtendedHDAE::new(c.block("first", 0, 0), c.block("second", 0, 0), ident(n1), c.block("s", 0, 0))),
            Constraint::Derivative { k21: c.block("first", 1, 0) },
        ),
        ExtendedVariant::DiracFirst => (
            ReducedSystem::Extended(ExtendedHDAE::new(ident(n1), c.block("second", 0, 0), c.block("p", 0, 0), c.block("s", 0, 0))),
            Constraint::Zero,
        ),
        ExtendedVariant::Monotone => (
            ReducedSystem::Monotone {
                c11: c.block("first", 0, 0),
                p11: c.block("p", 0, 0),
                s11: c.block("s", 0, 0),
                s12: c.block("s", 0, 1),
            },
            Constraint::Constant,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn ex_b() -> ExtendedHDAE {
        let k = Mat::identity(2, 2);
        let l = dmatrix![0.0, 1.0; -1.0, 0.0];
        let p = dmatrix![1.0, 0.0; 0.0, 0.0];
        ExtendedHDAE::new(k, l, p, Mat::identity(2, 2))
    }

    #[test]
    fn both_variants_split_half() {
        let tol = TolerancePolicy::default();
        for (v, sizes) in [(ExtendedVariant::LagrangeFirst, (1, 1)), (ExtendedVariant::DiracFirst, (2, 0))] {
            let c = extended_condense(&ex_b(), v, &tol).unwrap();
            assert_eq!((c.n1, c.n2), sizes, "{v:?}");
            assert!(c.residual < 1e-13, "{v:?} {}", c.residual);
            assert!(c.checks.iter().all(|k| k.passed));
        }
    }

    #[test]
    fn singular_rejected() {
        let z = Mat::zeros(2, 2);
        let sys = ExtendedHDAE::new(Mat::identity(2, 2), z.clone(), z.clone(), z);
        assert!(matches!(
            extended_condense(&sys, ExtendedVariant::LagrangeFirst, &TolerancePolicy::default()),
            Err(Error::NotRegular)
        ));
    }

    #[test]
    fn monotone_msd_like() {
        // C = I, D = J - R with R = diag(0, 1), P = diag(1, 0), S = I.
        let d = dmatrix![0.0, 1.0; -1.0, -1.0];
        let sys = MonotoneAnnihilatorSystem::new(Mat::identity(2, 2), d, dmatrix![1.0, 0.0; 0.0, 0.0], Mat::identity(2, 2));
        let c = monotone_condense(&sys, &TolerancePolicy::default()).unwrap();
        assert_eq!((c.n1, c.n2), (2, 0));
        assert!(c.residual < 1e-13);
        assert!(c.checks.iter().all(|k| k.passed), "{:?}", c.checks);
    }
}

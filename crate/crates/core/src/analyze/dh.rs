use serde::{Deserialize, Serialize};

use super::{finite_part, index, wong_sequences, Pencil};
use crate::error::{Error, Result};
use crate::numkernel::{
    assemble, block_diag, hstack, image_basis_abs, inverse, kernel_basis_abs, mat_serde, rank_tol, skew_part,
    solve_lyapunov_inequality, svd, sym_part, Mat, TolerancePolicy,
};
use crate::structures::{DHSystem, ExtendedHDAE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DHVariant {
    WithQ,
    QIdentity,
    Lossless,
}

impl std::str::FromStr for DHVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with-q" => Ok(Self::WithQ),
            "q-identity" => Ok(Self::QIdentity),
            "lossless" => Ok(Self::Lossless),
            _ => Err(Error::InvalidInput(format!("unknown variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DHVerdict {
    pub equivalent: bool,
    pub variant: DHVariant,
    pub failed_conditions: Vec<String>,
    /// Conditions that cannot be decided from the pencil alone.
    pub side_conditions: Vec<String>,
    pub index: usize,
}

pub const RHP: &str = "eigenvalue in open right half plane";
pub const OFF_AXIS: &str = "eigenvalue off the imaginary axis";
pub const IMAG_NOT_SEMISIMPLE: &str = "imaginary eigenvalue not semisimple";
pub const ZERO_NOT_SEMISIMPLE: &str = "zero eigenvalue not semisimple";
pub const ZERO_BLOCK: &str = "zero eigenvalue has a Jordan block larger than two";
pub const INDEX_HIGH: &str = "index exceeds two";

/// Spectral and index conditions under which the pencil is equivalent to a
/// dissipative Hamiltonian pencil of the chosen variant.
pub fn check_dh_equivalence(p: &Pencil, variant: DHVariant, tol: &TolerancePolicy) -> Result<DHVerdict> {
    let rep = index(p, tol)?;
    let mut failed: Vec<&str> = Vec::new();
    let mut fail = |c: &'static str| {
        if !failed.contains(&c) {
            failed.push(c);
        }
    };
    if rep.index > 2 {
        fail(INDEX_HIGH);
    }
    let size = rep.finite_eigenvalues.iter().map(|e| e.value().norm()).fold(1.0, f64::max);
    let band = tol.cluster_tol * size;
    for ev in &rep.finite_eigenvalues {
        let on_axis = ev.re.abs() <= band;
        let zero = on_axis && ev.im.abs() <= band;
        if ev.re > band {
            fail(RHP);
        }
        if variant == DHVariant::Lossless && !on_axis {
            fail(OFF_AXIS);
        }
        if !on_axis {
            continue;
        }
        if !zero {
            if !ev.semisimple() {
                fail(IMAG_NOT_SEMISIMPLE);
            }
        } else if variant == DHVariant::WithQ {
            if ev.largest_block > 2 {
                fail(ZERO_BLOCK);
            }
        } else if !ev.semisimple() {
            fail(ZERO_NOT_SEMISIMPLE);
        }
    }
    let side_conditions = if variant == DHVariant::WithQ {
        vec!["regularity of lambda E - Q must be verified for the constructed Q".to_string()]
    } else {
        Vec::new()
    };
    Ok(DHVerdict {
        equivalent: failed.is_empty(),
        variant,
        failed_conditions: failed.into_iter().map(String::from).collect(),
        side_conditions,
        index: rep.index,
    })
}

/// Canonical dissipative Hamiltonian form with `Q = I`.
///
/// Row and column blocks are `[h1, h2, h3, h4, h1, h2]`; `left * E * right`
/// is `diag(I, 0, E33, 0, 0, 0)` and `left * A * right` has `I` at (1,5)
/// and (2,6), `A33` at (3,3), `-I` at (4,4), (5,1) and (6,2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DHCanonical {
    #[serde(with = "mat_serde")]
    pub left: Mat,
    #[serde(with = "mat_serde")]
    pub right: Mat,
    /// `(h1, h2, h3, h4)`.
    pub blocks: [usize; 4],
    #[serde(with = "mat_serde")]
    pub e33: Mat,
    #[serde(with = "mat_serde")]
    pub j33: Mat,
    #[serde(with = "mat_serde")]
    pub r33: Mat,
    /// The canonical pencil as a dH system with `Q = I`.
    pub dh: DHSystem,
    pub residual_e: f64,
    pub residual_a: f64,
}

impl DHCanonical {
    pub fn sizes(&self) -> [usize; 6] {
        let [h1, h2, h3, h4] = self.blocks;
        [h1, h2, h3, h4, h1, h2]
    }
}

pub fn dh_canonicalize(p: &Pencil, tol: &TolerancePolicy) -> Result<DHCanonical> {
    let verdict = check_dh_equivalence(p, DHVariant::QIdentity, tol)?;
    if !verdict.equivalent {
        return Err(Error::NotEquivalent(verdict.failed_conditions.join("; ")));
    }
    let n = p.n();
    let w = wong_sequences(p, tol)?;
    let fp = finite_part(p, &w)?;
    let k = fp.v.ncols();
    let d = n - k;
    let u_inf = svd(&(&p.a * &w.w_star))?.u.columns(0, d).into_owned();
    let y_inv = inverse(&hstack(&[&fp.u, &u_inf]), "deflating basis")?;
    let t = hstack(&[&fp.v, &w.w_star]);
    let eb = &y_inv * &p.e * &t;
    let ab = &y_inv * &p.a * &t;
    let ef = eb.view((0, 0), (k, k)).into_owned();
    let af = ab.view((0, 0), (k, k)).into_owned();
    let ne = eb.view((k, k), (d, d)).into_owned();
    let na = ab.view((k, k), (d, d)).into_owned();

    let ef_inv = inverse(&ef, "finite block of E")?;
    let f = &ef_inv * &af;
    let x = solve_lyapunov_inequality(&f, tol)?;
    let a33 = &x * &f;

    let na_inv = inverse(&na, "infinite block of A")?;
    let nil = &na_inv * &ne;
    let thr = tol.structural_threshold(n, p.scale()) * na_inv.norm().max(1.0);
    let g = image_basis_abs(&nil.transpose(), thr);
    let c = g.ncols();
    if 2 * c > d {
        return Err(Error::IndexTooHigh(3));
    }
    let h = &nil * &g;
    let ker = kernel_basis_abs(&nil, thr);
    let qh = svd(&h)?.u.columns(0, c).into_owned();
    let proj = &ker - &qh * (qh.transpose() * &ker);
    let kb = svd(&proj)?.u.columns(0, d - 2 * c).into_owned();
    let z = hstack(&[&g, &kb, &h]);
    let lam = inverse(&hstack(&[&h, &(-&kb), &(-&g)]), "nilpotent chain basis")?;

    let left_raw = block_diag(&[&(&x * &ef_inv), &(&lam * &na_inv)]) * &y_inv;
    let right_raw = &t * block_diag(&[&Mat::identity(k, k), &z]);
    // Reorder [finite, r1, r4, r5] into [r1, finite, r4, r5].
    let order: Vec<usize> = (k..k + c).chain(0..k).chain(k + c..n).collect();
    let left = Mat::from_fn(n, n, |i, j| left_raw[(order[i], j)]);
    let right = Mat::from_fn(n, n, |i, j| right_raw[(i, order[j])]);

    let h4 = d - 2 * c;
    let sizes = [c, 0, k, h4, c, 0];
    let e_can = assemble(&sizes, &sizes, &[(0, 0, Mat::identity(c, c)), (2, 2, x.clone())]);
    let a_can = assemble(
        &sizes,
        &sizes,
        &[
            (0, 4, Mat::identity(c, c)),
            (2, 2, a33.clone()),
            (3, 3, -Mat::identity(h4, h4)),
            (4, 0, -Mat::identity(c, c)),
        ],
    );
    let residual_e = (&left * &p.e * &right - &e_can).norm();
    let residual_a = (&left * &p.a * &right - &a_can).norm();
    let dh = DHSystem::new(e_can, skew_part(&a_can), -sym_part(&a_can), Mat::identity(n, n));
    Ok(DHCanonical {
        left,
        right,
        blocks: [c, 0, k, h4],
        e33: x,
        j33: skew_part(&a33),
        r33: -sym_part(&a33),
        dh,
        residual_e,
        residual_a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexLaw {
    pub index: usize,
    pub p_singular: bool,
    pub law_holds: bool,
}

/// Index of a regular extended system and whether it obeys
/// "index at most two, and index two only with singular `P`".
pub fn verify_structured_index_law(sys: &ExtendedHDAE, tol: &TolerancePolicy) -> Result<IndexLaw> {
    let rep = index(&Pencil::try_from(sys)?, tol)?;
    let p_singular = rank_tol(&sys.p, tol)? < sys.n();
    let law_holds = rep.index <= 2 && (rep.index < 2 || p_singular);
    Ok(IndexLaw { index: rep.index, p_singular, law_holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::min_sym_eig;
    use nalgebra::dmatrix;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn verdict(e: Mat, a: Mat, v: DHVariant) -> DHVerdict {
        check_dh_equivalence(&Pencil::new(e, a).unwrap(), v, &tol()).unwrap()
    }

    #[test]
    fn verdict_examples() {
        let rot = dmatrix![0.0, 1.0; -1.0, 0.0];
        assert!(verdict(Mat::identity(2, 2), rot, DHVariant::Lossless).equivalent);
        for v in [DHVariant::WithQ, DHVariant::QIdentity, DHVariant::Lossless] {
            let r = verdict(dmatrix![1.0], dmatrix![1.0], v);
            assert!(!r.equivalent);
            assert!(r.failed_conditions.iter().any(|c| c == RHP));
        }
        let e = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; 0.0, 0.0, 0.0];
        let r = verdict(e, Mat::identity(3, 3), DHVariant::WithQ);
        assert_eq!(r.failed_conditions, vec![INDEX_HIGH.to_string()]);
    }

    #[test]
    fn zero_jordan_block_two() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        assert!(verdict(Mat::identity(2, 2), a.clone(), DHVariant::WithQ).equivalent);
        let r = verdict(Mat::identity(2, 2), a, DHVariant::QIdentity);
        assert_eq!(r.failed_conditions, vec![ZERO_NOT_SEMISIMPLE.to_string()]);
    }

    #[test]
    fn canonical_scalar_and_rotation() {
        let c = dh_canonicalize(&Pencil::new(dmatrix![1.0], dmatrix![-1.0]).unwrap(), &tol()).unwrap();
        assert!((c.e33[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((c.r33[(0, 0)] - 0.5).abs() < 1e-14);
        let c = dh_canonicalize(&Pencil::new(Mat::identity(2, 2), dmatrix![0.0, 1.0; -1.0, 0.0]).unwrap(), &tol()).unwrap();
        assert!((&c.e33 - Mat::identity(2, 2)).norm() < 1e-12);
        assert!(c.r33.norm() < 1e-12);
        assert_eq!(c.blocks, [0, 0, 2, 0]);
    }

    #[test]
    fn canonical_with_index_two_part() {
        let e = dmatrix![1.0, 0.0, 0.0; 0.0, 0.0, 1.0; 0.0, 0.0, 0.0];
        let a = dmatrix![-2.0, 0.0, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 1.0];
        let c = dh_canonicalize(&Pencil::new(e, a).unwrap(), &tol()).unwrap();
        assert_eq!(c.blocks, [1, 0, 1, 0]);
        assert!(c.residual_e < 1e-12 && c.residual_a < 1e-12, "{} {}", c.residual_e, c.residual_a);
        assert!(c.dh.validate(&tol()).unwrap().valid);
        assert!(min_sym_eig(&c.e33) > 0.0);
    }

    #[test]
    fn index_law_trivial() {
        let sys = ExtendedHDAE::new(
            Mat::identity(2, 2),
            dmatrix![0.0, 1.0; -1.0, 0.0],
            Mat::identity(2, 2),
            Mat::identity(2, 2),
        );
        let law = verify_structured_index_law(&sys, &tol()).unwrap();
        assert_eq!(law, IndexLaw { index: 0, p_singular: false, law_holds: true });
    }
}

//! Independent brute-force checks and seeded random instances for testing
//! the structured algorithms.

mod family;
mod random;

pub use family::{stability_family, Component, FamilyCase};
pub use random::{
    weierstrass_from,
    random_dh, random_dirac, random_extended_regular, random_invertible, random_lagrange, random_lagrange_sized, random_monotone,
    random_monotone_system, random_orthogonal, random_structured, random_weierstrass, structured_equivalence,
    Equivalence, RandomInstance, RandomKind, WeierstrassPencil,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analyze::Pencil;
use crate::condense::{DiracBlocks, LagrangeBlocks};
use crate::error::{Error, Result};
use crate::numkernel::{
    hstack, image_basis_abs, kernel_basis_abs, left_annihilator_abs, rank_abs, spectral_norm, svd, vstack, Mat,
    TolerancePolicy,
};
use crate::structures::{DiracPair, LagrangePair};

/// Differentiation index by the shuffle algorithm: compress the rows of
/// `E`, differentiate the algebraic rows and repeat until `E` is invertible.
pub fn shuffle_index(p: &Pencil, tol: &TolerancePolicy) -> Result<usize> {
    let n = p.n();
    let (mut e, mut a) = (p.e.clone(), p.a.clone());
    for step in 0..=n {
        let scale = spectral_norm(&e).max(spectral_norm(&a)).max(1.0);
        let thr = tol.structural_threshold(n, scale);
        let d = svd(&e)?;
        let r = d.rank_above(thr);
        if r == n {
            return Ok(step);
        }
        let ut = d.u.transpose();
        let et = &ut * &e;
        let at = &ut * &a;
        let a2 = at.rows(r, n - r).into_owned();
        if rank_abs(&a2, thr)? < n - r {
            return Err(Error::NotRegular);
        }
        e = vstack(&[&et.rows(0, r).into_owned(), &a2]);
        a = vstack(&[&at.rows(0, r).into_owned(), &Mat::zeros(n - r, n)]);
    }
    Err(Error::NotRegular)
}

/// Regular when `lambda E - A` has full rank at one of `n + 1` random shifts.
pub fn shift_regular(p: &Pencil, seed: u64, tol: &TolerancePolicy) -> Result<bool> {
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = p.scale();
    for _ in 0..=n {
        let lam: f64 = rho * rng.random_range(-3.0..3.0);
        let m = &p.e * lam - &p.a;
        if rank_abs(&m, tol.structural_threshold(n, lam.abs() * rho + rho))? == n {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Dimensions of the Wong sequences computed by explicit preimages:
/// `V_{i+1} = {x : A x in E V_i}` and `W_{i+1} = {x : E x in A W_i}`.
pub fn wong_dims_by_preimage(p: &Pencil, tol: &TolerancePolicy) -> (Vec<usize>, Vec<usize>) {
    let n = p.n();
    let thr = tol.structural_threshold(n, p.scale());
    let preimage = |m: &Mat, target: &Mat| -> Mat {
        let img = image_basis_abs(target, thr);
        let k = kernel_basis_abs(&hstack(&[m, &(-img)]), thr);
        image_basis_abs(&k.rows(0, n).into_owned(), thr)
    };
    let run = |m: &Mat, other: &Mat, start: Mat| -> Vec<usize> {
        let mut s = start;
        let mut dims = vec![s.ncols()];
        for _ in 0..=n {
            let next = preimage(m, &(other * &s));
            let done = next.ncols() == s.ncols();
            s = next;
            if done {
                break;
            }
            dims.push(s.ncols());
        }
        dims
    };
    (run(&p.a, &p.e, Mat::identity(n, n)), run(&p.e, &p.a, Mat::zeros(n, 0)))
}

/// Block sizes predicted without condensing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictedBlocks {
    Lagrange(LagrangeBlocks),
    Dirac(DiracBlocks),
}

pub enum PairRef<'a> {
    Lagrange(&'a LagrangePair),
    Dirac(&'a DiracPair),
}

pub fn predicted_block_sizes(pair: PairRef<'_>, tol: &TolerancePolicy) -> Result<PredictedBlocks> {
    Ok(match pair {
        PairRef::Lagrange(l) => PredictedBlocks::Lagrange(predicted_lagrange(l, tol)?),
        PairRef::Dirac(d) => PredictedBlocks::Dirac(predicted_dirac(d, tol)?),
    })
}

/// `m1 + m2 + m3 = rank P`, `(m1, m2)` the inertia of `P^T S`,
/// `m4 = rank(S ker P)`, `n5 = rank [P S] - rank P - m4`.
pub fn predicted_lagrange(l: &LagrangePair, tol: &TolerancePolicy) -> Result<LagrangeBlocks> {
    let (n, m) = l.p.shape();
    let sp = spectral_norm(&l.p);
    let ss = spectral_norm(&l.s);
    let dim = n.max(m);
    let thr = tol.structural_threshold(dim, sp.max(ss));
    let thr_prod = tol.structural_threshold(dim, sp * ss);
    let r = rank_abs(&l.p, thr)?;
    let g = l.p.transpose() * &l.s;
    let g = (&g + g.transpose()) * 0.5;
    let (mut m1, mut m2) = (0, 0);
    if m > 0 {
        for v in g.symmetric_eigenvalues().iter() {
            if *v > thr_prod {
                m1 += 1;
            } else if *v < -thr_prod {
                m2 += 1;
            }
        }
    }
    let ker = kernel_basis_abs(&l.p, thr);
    let m4 = rank_abs(&(&l.s * ker), thr)?;
    let n5 = rank_abs(&hstack(&[&l.p, &l.s]), thr)? - r - m4;
    Ok(LagrangeBlocks { m1, m2, m3: r - m1 - m2, m4, n5 })
}

/// `2 l1 = rank(K L^T)`, `2 l1 + l3 = rank K`, `l4 = rank(ann(K) L)`,
/// `n5 = rank [K; L] - rank K - l4`.
pub fn predicted_dirac(d: &DiracPair, tol: &TolerancePolicy) -> Result<DiracBlocks> {
    let (l, n) = d.k.shape();
    let sk = spectral_norm(&d.k);
    let sl = spectral_norm(&d.l);
    let dim = l.max(n);
    let thr = tol.structural_threshold(dim, sk.max(sl));
    let thr_prod = tol.structural_threshold(dim, sk * sl);
    let r = rank_abs(&d.k, thr)?;
    let l12 = rank_abs(&(&d.k * d.l.transpose()), thr_prod)?;
    let ann = left_annihilator_abs(&d.k, thr)?;
    let l4 = rank_abs(&(ann * &d.l), thr)?;
    let n5 = rank_abs(&vstack(&[&d.k, &d.l]), thr)? - r - l4;
    Ok(DiracBlocks { l1: l12 / 2, l3: r - l12, l4, n5 })
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{mat_serde, Mat};
use crate::structures::ExtendedHDAE;

/// `(K, L, P, S)` for one canonical block together with the block pencil
/// `lambda E - A` it reproduces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockRepresentation {
    pub label: String,
    pub system: ExtendedHDAE,
    #[serde(with = "mat_serde")]
    pub e: Mat,
    #[serde(with = "mat_serde")]
    pub a: Mat,
}

fn swap(n: usize) -> Mat {
    let mut l = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        l[(i, n + i)] = 1.0;
        l[(n + i, i)] = -1.0;
    }
    l
}

/// Representations of the blocks of the lossless canonical form: the index
/// two block (and its index reduced variant), the index one pair in two
/// variants, the dynamic block `lambda E33 - A33` and the algebraic block.
/// `a33` must be skew-symmetric and `e33` symmetric.
pub fn four_block_representations(n1: usize, n2: usize, e33: &Mat, a33: &Mat, n4: usize) -> Result<Vec<BlockRepresentation>> {
    let n3 = e33.nrows();
    if e33.shape() != (n3, n3) || a33.shape() != (n3, n3) {
        return Err(Error::DimensionMismatch("E33 and A33 must be square of equal size".into()));
    }
    let skew = (a33 + a33.transpose()).norm();
    if skew > 1e-12 * a33.norm().max(1.0) {
        return Err(Error::NotSkewSymmetric(skew));
    }
    let sym = (e33 - e33.transpose()).norm();
    if sym > 1e-12 * e33.norm().max(1.0) {
        return Err(Error::NotSymmetric(sym));
    }
    let id = |n: usize| Mat::identity(n, n);
    let z = |n: usize| Mat::zeros(n, n);
    let p1 = {
        let mut p = z(2 * n1);
        p.view_mut((0, 0), (n1, n1)).fill_with_identity();
        p
    };
    let mk = |label: &str, sys: ExtendedHDAE, e: Mat, a: Mat| BlockRepresentation { label: label.into(), system: sys, e, a };
    Ok(vec![
        mk("1", ExtendedHDAE::new(id(2 * n1), swap(n1), p1.clone(), id(2 * n1)), p1.clone(), swap(n1)),
        mk("1-reduced", ExtendedHDAE::new(z(2 * n1), swap(n1), p1, id(2 * n1)), z(2 * n1), swap(n1)),
        mk("2a", ExtendedHDAE::new(id(2 * n2), swap(n2), z(2 * n2), id(2 * n2)), z(2 * n2), swap(n2)),
        mk("2b", ExtendedHDAE::new(z(2 * n2), swap(n2), z(2 * n2), id(2 * n2)), z(2 * n2), swap(n2)),
        mk("3", ExtendedHDAE::new(id(n3), a33.clone(), e33.clone(), id(n3)), e33.clone(), a33.clone()),
        mk("4", ExtendedHDAE::new(z(n4), id(n4), id(n4), id(n4)), z(n4), id(n4)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::TolerancePolicy;
    use nalgebra::dmatrix;

    #[test]
    fn blocks_validate_and_reproduce() {
        let e33 = dmatrix![2.0, 0.5; 0.5, 1.0];
        let a33 = dmatrix![0.0, 3.0; -3.0, 0.0];
        let tol = TolerancePolicy::default();
        let reps = four_block_representations(2, 1, &e33, &a33, 3).unwrap();
        assert_eq!(reps.len(), 6);
        for r in &reps {
            assert!(r.system.validate(&tol).unwrap().valid, "{}", r.label);
            let (kp, ls) = r.system.pencil();
            assert_eq!(kp, r.e, "{}", r.label);
            assert_eq!(ls, r.a, "{}", r.label);
        }
        let b3 = &reps[4].system;
        assert_eq!((b3.k.clone(), b3.p.clone()), (Mat::identity(2, 2), e33));
        let b4 = &reps[5].system;
        assert_eq!(b4.k, Mat::zeros(3, 3));
        assert_eq!(b4.l, Mat::identity(3, 3));
    }

    #[test]
    fn reduced_block_keeps_energy() {
        let reps = four_block_representations(1, 0, &Mat::zeros(0, 0), &Mat::zeros(0, 0), 0).unwrap();
        let gram = |i: usize| reps[i].system.p.transpose() * &reps[i].system.s;
        assert_eq!(gram(0), gram(1));
        // only solution of the reduced block is zero, where the energy vanishes
        assert_eq!(reps[1].system.l.clone().try_inverse().unwrap().nrows(), 2);
    }

    #[test]
    fn rejects_dissipative_a33() {
        let r = four_block_representations(0, 0, &Mat::identity(1, 1), &dmatrix![-1.0], 0);
        assert!(matches!(r, Err(Error::NotSkewSymmetric(_))));
    }
}

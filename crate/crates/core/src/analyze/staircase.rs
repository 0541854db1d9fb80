use serde::{Deserialize, Serialize};

use super::{index, Pencil};
use crate::error::{Error, Result};
use crate::numkernel::{block_diag, grid, mat_serde, rank_abs, solve, sub, svd, Mat, TolerancePolicy};

/// Orthogonal index-two staircase `U^T E V`, `U^T A V` on the block grid
/// `[n1, n2, n3, n4]` for rows and columns, with `n4 = n1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Index2Staircase {
    #[serde(with = "mat_serde")]
    pub u: Mat,
    #[serde(with = "mat_serde")]
    pub v: Mat,
    pub blocks: [usize; 4],
    #[serde(with = "mat_serde")]
    pub e: Mat,
    #[serde(with = "mat_serde")]
    pub a: Mat,
    /// Norm of the entries that must vanish.
    pub pattern_residual: f64,
}

impl Index2Staircase {
    pub fn block_e(&self, i: usize, j: usize) -> Mat {
        grid(&self.e, &self.blocks, &self.blocks, i, j)
    }

    pub fn block_a(&self, i: usize, j: usize) -> Mat {
        grid(&self.a, &self.blocks, &self.blocks, i, j)
    }
}

pub fn index2_staircase(p: &Pencil, tol: &TolerancePolicy) -> Result<Index2Staircase> {
    let rep = index(p, tol)?;
    if rep.index > 2 {
        return Err(Error::IndexTooHigh(rep.index));
    }
    let n = p.n();
    let thr = tol.structural_threshold(n, p.scale());

    let d1 = svd(&p.e)?;
    let nt = d1.rank_above(thr);
    let a1 = d1.u.transpose() * &p.a * &d1.v;
    let d2 = svd(&sub(&a1, nt, nt, n - nt, n - nt))?;
    let n3 = d2.rank_above(thr);
    let n1 = n - nt - n3;
    if n1 > nt {
        return Err(Error::NotRegular);
    }
    let n2 = nt - n1;
    let u12 = &d1.u * block_diag(&[&Mat::identity(nt, nt), &d2.u]);
    let v12 = &d1.v * block_diag(&[&Mat::identity(nt, nt), &d2.v]);
    let a2 = u12.transpose() * &p.a * &v12;
    let a13 = sub(&a2, 0, nt + n3, nt, n1);
    let a31 = sub(&a2, nt + n3, 0, n1, nt);
    let d13 = svd(&a13)?;
    let d31 = svd(&a31)?;
    if d13.rank_above(thr) != n1 || d31.rank_above(thr) != n1 {
        return Err(Error::NotRegular);
    }
    let u = &u12 * block_diag(&[&d13.u, &Mat::identity(n3, n3), &d31.u]);
    let v = &v12 * block_diag(&[&d31.v, &Mat::identity(n3, n3), &d13.v]);
    let e = u.transpose() * &p.e * &v;
    let a = u.transpose() * &p.a * &v;
    let blocks = [n1, n2, n3, n1];
    let mut zero = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i >= 2 || j >= 2 {
                zero += grid(&e, &blocks, &blocks, i, j).norm_squared();
            }
        }
    }
    for (i, j) in [(1, 3), (2, 3), (3, 1), (3, 2), (3, 3)] {
        zero += grid(&a, &blocks, &blocks, i, j).norm_squared();
    }
    let st = Index2Staircase { u, v, blocks, e, a, pattern_residual: zero.sqrt() };
    for (m, what) in [
        (st.block_a(0, 3), "A14"),
        (st.block_a(3, 0), "A41"),
        (st.block_a(2, 2), "A33"),
    ] {
        if rank_abs(&m, thr)? != m.nrows() {
            return Err(Error::Numerical(format!("{what} lost invertibility")));
        }
    }
    let e22 = st.block_e(1, 1);
    if rank_abs(&e22, thr)? != n2 {
        return Err(Error::IndexTooHigh(3));
    }
    Ok(st)
}

/// Implicit ODE `E22 x2' = (A22 - A23 A33^{-1} A32) x2` with `x1 = 0` and
/// `x3 = -A33^{-1} A32 x2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedOde {
    #[serde(with = "mat_serde")]
    pub e22: Mat,
    #[serde(with = "mat_serde")]
    pub a_red: Mat,
    /// `-A33^{-1} A32`.
    #[serde(with = "mat_serde")]
    pub x3_from_x2: Mat,
}

pub fn reduced_ode(st: &Index2Staircase) -> Result<ReducedOde> {
    let a33 = st.block_a(2, 2);
    let sol = solve(&a33, &st.block_a(2, 1), "A33")?;
    let a_red = st.block_a(1, 1) - st.block_a(1, 2) * &sol;
    Ok(ReducedOde { e22: st.block_e(1, 1), a_red, x3_from_x2: -sol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn trivial_cases() {
        let tol = TolerancePolicy::default();
        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        let st = index2_staircase(&Pencil::new(Mat::identity(2, 2), a).unwrap(), &tol).unwrap();
        assert_eq!(st.blocks, [0, 2, 0, 0]);
        let r = reduced_ode(&st).unwrap();
        assert_eq!(r.e22.shape(), (2, 2));
        let st = index2_staircase(&Pencil::new(Mat::zeros(3, 3), Mat::identity(3, 3)).unwrap(), &tol).unwrap();
        assert_eq!(st.blocks, [0, 0, 3, 0]);
        assert_eq!(reduced_ode(&st).unwrap().e22.shape(), (0, 0));
    }

    #[test]
    fn index_two_chain() {
        let tol = TolerancePolicy::default();
        let st = index2_staircase(&Pencil::new(dmatrix![0.0, 1.0; 0.0, 0.0], Mat::identity(2, 2)).unwrap(), &tol).unwrap();
        assert_eq!(st.blocks, [1, 0, 0, 1]);
        assert!(st.pattern_residual < 1e-14);
    }

    #[test]
    fn rejects_index_three() {
        let e = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; 0.0, 0.0, 0.0];
        let r = index2_staircase(&Pencil::new(e, Mat::identity(3, 3)).unwrap(), &TolerancePolicy::default());
        assert!(matches!(r, Err(Error::IndexTooHigh(3))));
    }
}

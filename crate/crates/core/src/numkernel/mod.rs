//! Dense numerical primitives: rank-revealing factorizations, annihilators,
//! congruence canonical forms, eigenvalue extraction and a Lyapunov
//! inequality solver.

mod congruence;
mod eigen;
mod factor;
mod lyapunov;
mod tolerance;

pub use congruence::{
    signature_abs, skew_abs, skew_congruence_canonical, symmetric_congruence_signature, SignatureForm,
    SkewForm,
};
pub use eigen::{cluster_eigenvalues, eigenvalues, EigenCluster};
pub use factor::{
    full_rank_decomposition, image_basis, image_basis_abs, kernel_basis, kernel_basis_abs,
    left_annihilator, left_annihilator_abs, rank_abs, rank_tol, spectral_norm, svd,
    FullRankDecomposition, Svd,
};
pub use lyapunov::solve_lyapunov_inequality;
pub use tolerance::{TolerancePolicy, GUARD};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix; the universal carrier.
pub type Mat = DMatrix<f64>;

/// Wire format of a matrix: row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl RealMatrix {
    pub fn to_mat(&self) -> Result<Mat> {
        if self.data.len() != self.rows || self.data.iter().any(|r| r.len() != self.cols) {
            return Err(Error::DimensionMismatch(format!(
                "declared {}x{} does not match data",
                self.rows, self.cols
            )));
        }
        let m = Mat::from_fn(self.rows, self.cols, |i, j| self.data[i][j]);
        check_finite(&m, "matrix")?;
        Ok(m)
    }

    pub fn from_mat(m: &Mat) -> Self {
        RealMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        }
    }
}

/// Serde adapter storing a [`Mat`] as a [`RealMatrix`].
pub mod mat_serde {
    use super::{Mat, RealMatrix};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        RealMatrix::from_mat(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        RealMatrix::deserialize(d)?.to_mat().map_err(serde::de::Error::custom)
    }
}

/// Orthonormal basis of a subspace of `R^ambient_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    pub ambient_dim: usize,
    pub basis: Mat,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }

    pub fn orthonormality_residual(&self) -> f64 {
        (self.basis.transpose() * &self.basis - Mat::identity(self.dim(), self.dim())).norm()
    }
}

pub fn check_finite(a: &Mat, name: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} has non-finite entries")))
    }
}

pub fn sym_part(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

pub fn skew_part(a: &Mat) -> Mat {
    (a - a.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part; `+inf` for empty matrices.
pub fn min_sym_eig(a: &Mat) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    sym_part(a).symmetric_eigenvalues().min()
}

pub fn zeros(r: usize, c: usize) -> Mat {
    Mat::zeros(r, c)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn sub(a: &Mat, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
    a.view((r0, c0), (nr, nc)).into_owned()
}

pub fn set_block(a: &mut Mat, r0: usize, c0: usize, b: &Mat) {
    a.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
}

pub fn hstack(blocks: &[&Mat]) -> Mat {
    let r = blocks.first().map_or(0, |b| b.nrows());
    let c = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), r, "hstack row mismatch");
        set_block(&mut out, 0, off, b);
        off += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&Mat]) -> Mat {
    let c = blocks.first().map_or(0, |b| b.ncols());
    let r = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(r, c);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.ncols(), c, "vstack column mismatch");
        set_block(&mut out, off, 0, b);
        off += b.nrows();
    }
    out
}

pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let r = blocks.iter().map(|b| b.nrows()).sum();
    let c = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let (mut ro, mut co) = (0, 0);
    for b in blocks {
        set_block(&mut out, ro, co, b);
        ro += b.nrows();
        co += b.ncols();
    }
    out
}

/// Matrix of `parts` laid out on a block grid with the given row and column
/// sizes. Missing entries are zero.
pub fn assemble(rows: &[usize], cols: &[usize], parts: &[(usize, usize, Mat)]) -> Mat {
    let ro: Vec<usize> = offsets(rows);
    let co: Vec<usize> = offsets(cols);
    let mut out = Mat::zeros(rows.iter().sum(), cols.iter().sum());
    for (i, j, b) in parts {
        assert_eq!((b.nrows(), b.ncols()), (rows[*i], cols[*j]), "block ({i},{j}) size");
        set_block(&mut out, ro[*i], co[*j], b);
    }
    out
}

pub fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .iter()
        .map(|s| {
            let o = acc;
            acc += s;
            o
        })
        .collect()
}

/// Sub-block `(i, j)` of `a` partitioned by `rows` x `cols`.
pub fn grid(a: &Mat, rows: &[usize], cols: &[usize], i: usize, j: usize) -> Mat {
    let ro = offsets(rows);
    let co = offsets(cols);
    sub(a, ro[i], co[j], rows[i], cols[j])
}

/// Inverse via LU, refusing matrices whose rank falls below full at `thr`.
pub fn inverse(a: &Mat, what: &'static str) -> Result<Mat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!("{what} is not square")));
    }
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let s = svd(a)?;
    let thr = (n as f64) * f64::EPSILON * s.sigma[0];
    if s.sigma[n - 1] <= thr {
        return Err(Error::Singular(what));
    }
    a.clone().try_inverse().ok_or(Error::Singular(what))
}

/// 2-norm condition number; `inf` for singular, `1` for empty.
pub fn cond(a: &Mat) -> f64 {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return 1.0;
    }
    match svd(a) {
        Ok(s) if s.sigma[k - 1] > 0.0 => s.sigma[0] / s.sigma[k - 1],
        _ => f64::INFINITY,
    }
}

/// Solve `a x = b` for square invertible `a`.
pub fn solve(a: &Mat, b: &Mat, what: &'static str) -> Result<Mat> {
    if a.nrows() == 0 {
        return Ok(Mat::zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b).ok_or(Error::Singular(what))
}

/// Orthonormal columns spanning the orthogonal complement of the
/// orthonormal columns of `q`.
pub fn orth_complement(q: &Mat) -> Mat {
    if q.ncols() == 0 {
        return Mat::identity(q.nrows(), q.nrows());
    }
    kernel_basis_abs(&q.transpose(), 0.5)
}

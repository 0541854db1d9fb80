use nalgebra::DVector;

use super::{check_finite, Mat, TolerancePolicy};
use crate::error::{Error, Result};

/// Full singular value decomposition `A = U diag(sigma) V^T` with square
/// orthogonal `U`, `V` and `sigma` sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub sigma: DVector<f64>,
    pub v: Mat,
}

impl Svd {
    pub fn sigma1(&self) -> f64 {
        self.sigma.iter().copied().next().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `thr`.
    pub fn rank_above(&self, thr: f64) -> usize {
        self.sigma.iter().filter(|&&s| s > thr).count()
    }

    /// `U diag(sigma) V^T` with the rectangular diagonal padded.
    pub fn sigma_matrix(&self) -> Mat {
        let mut s = Mat::zeros(self.u.nrows(), self.v.nrows());
        for (i, v) in self.sigma.iter().enumerate() {
            s[(i, i)] = *v;
        }
        s
    }
}

pub fn svd(a: &Mat) -> Result<Svd> {
    check_finite(a, "matrix")?;
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return Ok(Svd {
            u: Mat::identity(m, m),
            sigma: DVector::zeros(0),
            v: Mat::identity(n, n),
        });
    }
    // nalgebra's bidiagonal SVD can lose accuracy on exactly rank deficient
    // rectangular input, so the decomposition is delegated to faer.
    let f = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let d = f.svd().map_err(|_| Error::Numerical("SVD did not converge".into()))?;
    let (u, s, v) = (d.U(), d.S().column_vector(), d.V());
    Ok(Svd {
        u: Mat::from_fn(m, m, |i, j| u[(i, j)]),
        sigma: DVector::from_fn(m.min(n), |i, _| s[i]),
        v: Mat::from_fn(n, n, |i, j| v[(i, j)]),
    })
}

pub fn spectral_norm(a: &Mat) -> f64 {
    svd(a).map(|s| s.sigma1()).unwrap_or(f64::NAN)
}

/// Numerical rank with the relative cutoff of `tol`.
pub fn rank_tol(a: &Mat, tol: &TolerancePolicy) -> Result<usize> {
    let s = svd(a)?;
    Ok(s.rank_above(tol.rank_threshold(a.nrows(), a.ncols(), s.sigma1())))
}

/// Numerical rank with an absolute cutoff.
pub fn rank_abs(a: &Mat, thr: f64) -> Result<usize> {
    Ok(svd(a)?.rank_above(thr))
}

/// Maximal left annihilator with orthonormal rows.
pub fn left_annihilator(b: &Mat, tol: &TolerancePolicy) -> Result<Mat> {
    let s = svd(b)?;
    let thr = tol.rank_threshold(b.nrows(), b.ncols(), s.sigma1());
    Ok(trailing_cols(&s.u, s.rank_above(thr)).transpose())
}

pub fn left_annihilator_abs(b: &Mat, thr: f64) -> Result<Mat> {
    let s = svd(b)?;
    Ok(trailing_cols(&s.u, s.rank_above(thr)).transpose())
}

/// Orthonormal basis of the right null space.
pub fn kernel_basis(a: &Mat, tol: &TolerancePolicy) -> Result<Mat> {
    let s = svd(a)?;
    let thr = tol.rank_threshold(a.nrows(), a.ncols(), s.sigma1());
    Ok(trailing_cols(&s.v, s.rank_above(thr)))
}

pub fn kernel_basis_abs(a: &Mat, thr: f64) -> Mat {
    match svd(a) {
        Ok(s) => trailing_cols(&s.v, s.rank_above(thr)),
        Err(_) => Mat::zeros(a.ncols(), 0),
    }
}

/// Orthonormal basis of the column space.
pub fn image_basis(a: &Mat, tol: &TolerancePolicy) -> Result<Mat> {
    let s = svd(a)?;
    let thr = tol.rank_threshold(a.nrows(), a.ncols(), s.sigma1());
    let r = s.rank_above(thr);
    Ok(s.u.columns(0, r).into_owned())
}

pub fn image_basis_abs(a: &Mat, thr: f64) -> Mat {
    match svd(a) {
        Ok(s) => {
            let r = s.rank_above(thr);
            s.u.columns(0, r).into_owned()
        }
        Err(_) => Mat::zeros(a.nrows(), 0),
    }
}

fn trailing_cols(q: &Mat, r: usize) -> Mat {
    let n = q.ncols();
    q.columns(r, n - r).into_owned()
}

/// `A = basis * [core; 0]` with `basis` orthogonal and `core` of full row rank.
#[derive(Debug, Clone)]
pub struct FullRankDecomposition {
    pub basis: Mat,
    pub core: Mat,
    pub rank: usize,
}

pub fn full_rank_decomposition(a: &Mat, thr: f64) -> Result<FullRankDecomposition> {
    let s = svd(a)?;
    let r = s.rank_above(thr);
    let mut basis = s.u.clone();
    let mut core = Mat::zeros(r, a.ncols());
    for i in 0..r {
        let mut row = s.v.column(i).transpose() * s.sigma[i];
        let pivot = row.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            row = -row;
            let c = -basis.column(i);
            basis.set_column(i, &c);
        }
        core.set_row(i, &row);
    }
    Ok(FullRankDecomposition { basis, core, rank: r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn svd_of_diagonal() {
        let s = svd(&dmatrix![3.0, 0.0; 0.0, 1.0]).unwrap();
        assert_eq!(s.sigma.as_slice(), &[3.0, 1.0]);
    }

    #[test]
    fn svd_zero_and_empty() {
        let s = svd(&Mat::zeros(2, 3)).unwrap();
        assert!(s.sigma.iter().all(|&v| v == 0.0));
        assert_eq!((s.u.nrows(), s.v.nrows()), (2, 3));
        let e = svd(&Mat::zeros(0, 4)).unwrap();
        assert_eq!(e.v.shape(), (4, 4));
    }

    #[test]
    fn svd_rejects_nan() {
        assert!(matches!(svd(&dmatrix![f64::NAN]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rank_examples() {
        let t = TolerancePolicy::default();
        assert_eq!(rank_tol(&Mat::identity(3, 3), &t).unwrap(), 3);
        assert_eq!(rank_tol(&dmatrix![1.0, 0.0; 0.0, 1e-30], &t).unwrap(), 1);
        assert_eq!(rank_tol(&dmatrix![1.0, 2.0; 2.0, 4.0], &t).unwrap(), 1);
    }

    #[test]
    fn annihilator_of_unit_vector() {
        let z = left_annihilator(&dmatrix![1.0; 0.0], &TolerancePolicy::default()).unwrap();
        assert_eq!(z.shape(), (1, 2));
        assert!(z[(0, 0)].abs() < 1e-15 && (z[(0, 1)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_rank_decomposition_of_ones() {
        let f = full_rank_decomposition(&dmatrix![1.0; 1.0], 1e-12).unwrap();
        assert_eq!(f.rank, 1);
        assert!((f.core[(0, 0)] - 2f64.sqrt()).abs() < 1e-14);
        assert!((f.basis[(0, 0)] - f.basis[(1, 0)]).abs() < 1e-14);
        let z = full_rank_decomposition(&Mat::zeros(3, 2), 1e-12).unwrap();
        assert_eq!(z.core.shape(), (0, 2));
    }
}

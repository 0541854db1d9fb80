use super::{
    block_diag, cluster_eigenvalues, eigenvalues, hstack, inverse, kernel_basis_abs, min_sym_eig,
    spectral_norm, sub, sym_part, Mat, TolerancePolicy,
};
use crate::error::{Error, Result};

/// Symmetric positive definite `X` with `A^T X + X A <= 0`.
///
/// The asymptotically stable part solves `A_s^T X + X A_s = -I`; each
/// purely imaginary cluster `+-iw` is normalized to `J0 = A_w / w` with
/// `J0^2 = -I` and gets `X = (I + J0^T J0) / 2`. The blocks are glued by the
/// congruence that block-diagonalizes `A`.
pub fn solve_lyapunov_inequality(a: &Mat, tol: &TolerancePolicy) -> Result<Mat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch("Lyapunov needs a square matrix".into()));
    }
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let scale = spectral_norm(a).max(f64::MIN_POSITIVE);
    let band = tol.cluster_tol * scale;
    let eigs = eigenvalues(a)?;
    if let Some(bad) = eigs.iter().find(|l| l.re > band) {
        return Err(Error::SpectrumViolation(format!(
            "eigenvalue {:.6e}{:+.6e}i in the open right half plane",
            bad.re, bad.im
        )));
    }
    let imag: Vec<_> = eigs.iter().copied().filter(|l| l.re.abs() <= band).collect();
    let clusters = cluster_eigenvalues(&imag, band.max(tol.cluster_tol * scale));
    let mut freqs: Vec<(f64, usize)> = Vec::new();
    for c in &clusters {
        if c.value.im < 0.0 {
            continue;
        }
        let mult = if c.value.im > 0.0 { 2 * c.algebraic } else { c.algebraic };
        freqs.push((c.value.im, mult));
    }

    let mut right_blocks: Vec<Mat> = Vec::new();
    let mut left_blocks: Vec<Mat> = Vec::new();
    for &(w, mult) in &freqs {
        let (m, mt) = if w == 0.0 {
            (a.clone(), a.transpose())
        } else {
            let id = Mat::identity(n, n) * (w * w);
            (a * a + &id, a.transpose() * a.transpose() + id)
        };
        let thr = tol.cluster_tol * spectral_norm(&m).max(scale * scale);
        let y = kernel_basis_abs(&m, thr);
        let z = kernel_basis_abs(&mt, thr);
        if y.ncols() != mult || z.ncols() != mult {
            return Err(Error::SpectrumViolation(format!(
                "imaginary eigenvalue {w:.6e}i is not semisimple"
            )));
        }
        right_blocks.push(y);
        left_blocks.push(z);
    }
    let left_all = if left_blocks.is_empty() {
        Mat::zeros(n, 0)
    } else {
        hstack(&left_blocks.iter().collect::<Vec<_>>())
    };
    let ys = super::orth_complement(&super::image_basis_abs(&left_all, 0.5));
    let mut cols = vec![&ys];
    cols.extend(right_blocks.iter());
    let t = hstack(&cols);
    if t.ncols() != n {
        return Err(Error::SpectrumViolation("invariant subspaces do not span the space".into()));
    }
    let tinv = inverse(&t, "eigenbasis")?;
    let b = &tinv * a * &t;

    let mut xs: Vec<Mat> = Vec::new();
    let ks = ys.ncols();
    let bs = sub(&b, 0, 0, ks, ks);
    let x0 = lyapunov_equation(&bs)?;
    if ks > 0 && min_sym_eig(&x0) <= 0.0 {
        return Err(Error::SpectrumViolation("stable part is not asymptotically stable".into()));
    }
    xs.push(x0);
    let mut off = ks;
    for (&(w, _), y) in freqs.iter().zip(&right_blocks) {
        let k = y.ncols();
        let bk = sub(&b, off, off, k, k);
        let x = if w == 0.0 {
            Mat::identity(k, k)
        } else {
            let j0 = bk / w;
            (Mat::identity(k, k) + j0.transpose() * &j0) * 0.5
        };
        xs.push(x);
        off += k;
    }
    let xb = block_diag(&xs.iter().collect::<Vec<_>>());
    Ok(sym_part(&(tinv.transpose() * xb * &tinv)))
}

/// Solve `B^T X + X B = -I` by the Kronecker formulation.
fn lyapunov_equation(b: &Mat) -> Result<Mat> {
    let k = b.nrows();
    if k == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let id = Mat::identity(k, k);
    let bt = b.transpose();
    let op = id.kronecker(&bt) + bt.kronecker(&id);
    let rhs = nalgebra::DVector::from_iterator(k * k, (0..k * k).map(|i| if i % (k + 1) == 0 { -1.0 } else { 0.0 }));
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SpectrumViolation("Lyapunov operator is singular".into()))?;
    Ok(sym_part(&Mat::from_column_slice(k, k, sol.as_slice())))
}

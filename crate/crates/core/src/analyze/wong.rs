use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Pencil;
use crate::error::{Error, Result};
use crate::numkernel::{
    cluster_eigenvalues, eigenvalues, hstack, inverse, mat_serde, rank_abs, spectral_norm, svd, Mat,
    TolerancePolicy,
};

/// Limits of the two Wong sequences with the dimension history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WongData {
    #[serde(with = "mat_serde")]
    pub v_star: Mat,
    #[serde(with = "mat_serde")]
    pub w_star: Mat,
    pub v_dims: Vec<usize>,
    pub w_dims: Vec<usize>,
    pub threshold: f64,
    /// Smallest distance, in decades, between a singular value used in a
    /// rank decision and the threshold.
    pub margin: f64,
}

impl WongData {
    /// Number of strict increases of the second sequence.
    pub fn index(&self) -> usize {
        self.w_dims.windows(2).filter(|w| w[1] > w[0]).count()
    }
}

fn track(margin: &mut f64, sigma: &nalgebra::DVector<f64>, thr: f64) {
    for &s in sigma.iter() {
        if s > 0.0 && thr > 0.0 {
            *margin = margin.min((s / thr).log10().abs());
        }
    }
}

fn kernel_tracked(m: &Mat, thr: f64, margin: &mut f64) -> Result<Mat> {
    let d = svd(m)?;
    track(margin, &d.sigma, thr);
    let r = d.rank_above(thr);
    Ok(d.v.columns(r, m.ncols() - r).into_owned())
}

fn annihilator_tracked(b: &Mat, thr: f64, margin: &mut f64) -> Result<Mat> {
    let d = svd(b)?;
    track(margin, &d.sigma, thr);
    let r = d.rank_above(thr);
    Ok(d.u.columns(r, b.nrows() - r).transpose())
}

fn wong_at(p: &Pencil, thr: f64) -> Result<WongData> {
    let n = p.n();
    let mut margin = f64::INFINITY;
    let mut v = Mat::identity(n, n);
    let mut v_dims = vec![n];
    for _ in 0..=n {
        let c = annihilator_tracked(&(&p.e * &v), thr, &mut margin)?;
        let next = kernel_tracked(&(&c * &p.a), thr, &mut margin)?;
        let done = next.ncols() == v.ncols();
        v = next;
        if done {
            break;
        }
        v_dims.push(v.ncols());
    }
    let mut w = Mat::zeros(n, 0);
    let mut w_dims = vec![0];
    for _ in 0..=n {
        let c = annihilator_tracked(&(&p.a * &w), thr, &mut margin)?;
        let next = kernel_tracked(&(&c * &p.e), thr, &mut margin)?;
        let done = next.ncols() == w.ncols();
        w = next;
        if done {
            break;
        }
        w_dims.push(w.ncols());
    }
    Ok(WongData { v_star: v, w_star: w, v_dims, w_dims, threshold: thr, margin })
}

/// Wong sequences `V_{i+1} = A^{-1}(E V_i)` and `W_{i+1} = E^{-1}(A W_i)`.
pub fn wong_sequences(p: &Pencil, tol: &TolerancePolicy) -> Result<WongData> {
    tol.validate()?;
    wong_at(p, tol.structural_threshold(p.n(), p.scale()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub dim_v_star: usize,
    pub dim_w_star: usize,
    /// Unit vector in the intersection of the Wong limits when singular.
    pub certificate: Option<Vec<f64>>,
    /// Numerical rank of `lambda E - A` at each shift.
    pub shift_ranks: Vec<(f64, usize)>,
    pub shift_regular: bool,
    /// Whether the Wong decision and the shift test agree.
    pub agree: bool,
}

fn intersection(w: &WongData, tol: &TolerancePolicy, n: usize) -> Result<Option<Vec<f64>>> {
    let (kv, kw) = (w.v_star.ncols(), w.w_star.ncols());
    if kv == 0 || kw == 0 {
        return Ok(None);
    }
    let m = hstack(&[&w.v_star, &(-&w.w_star)]);
    let d = svd(&m)?;
    // Both bases are orthonormal, so the smallest singular value measures
    // the smallest principal angle.
    let angle_thr = 1e3 * tol.structural_threshold(n, 1.0);
    let k = kv + kw;
    let smin = if k > n { 0.0 } else { d.sigma[k - 1] };
    if smin > angle_thr {
        return Ok(None);
    }
    let coef = d.v.column(k - 1).rows(0, kv).into_owned();
    let x = &w.v_star * coef;
    let nrm = x.norm();
    Ok(Some(if nrm > 0.0 { (x / nrm).iter().copied().collect() } else { x.iter().copied().collect() }))
}

fn shift_test(p: &Pencil, tol: &TolerancePolicy) -> Result<Vec<(f64, usize)>> {
    let n = p.n();
    let ne = spectral_norm(&p.e);
    let na = spectral_norm(&p.a);
    let rho = if ne > 0.0 { (na / ne).max(1e-3) } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let lam = rho * rng.random_range(-2.0..2.0);
        let m = &p.e * lam - &p.a;
        let thr = tol.structural_threshold(n, lam.abs() * ne + na);
        out.push((lam, rank_abs(&m, thr)?));
    }
    Ok(out)
}

/// Regularity via the Wong limits, cross-checked by ranks at `n + 1` shifts.
pub fn regularity(p: &Pencil, tol: &TolerancePolicy) -> Result<RegularityReport> {
    let w = wong_sequences(p, tol)?;
    regularity_from(p, &w, tol)
}

fn regularity_from(p: &Pencil, w: &WongData, tol: &TolerancePolicy) -> Result<RegularityReport> {
    let n = p.n();
    let (kv, kw) = (w.v_star.ncols(), w.w_star.ncols());
    let certificate = intersection(w, tol, n)?;
    let regular = kv + kw == n && certificate.is_none();
    let shift_ranks = shift_test(p, tol)?;
    let shift_regular = shift_ranks.iter().any(|&(_, r)| r == n);
    Ok(RegularityReport {
        regular,
        dim_v_star: kv,
        dim_w_star: kw,
        certificate,
        shift_ranks,
        shift_regular,
        agree: regular == shift_regular,
    })
}

/// Restriction of the pencil to the finite deflating subspace:
/// `E_f = U^T E V`, `A_f = U^T A V` with `V` spanning `V*` and `U` spanning
/// `E V*`, and `F = E_f^{-1} A_f`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinitePart {
    #[serde(with = "mat_serde")]
    pub u: Mat,
    #[serde(with = "mat_serde")]
    pub v: Mat,
    #[serde(with = "mat_serde")]
    pub e_f: Mat,
    #[serde(with = "mat_serde")]
    pub a_f: Mat,
    #[serde(with = "mat_serde")]
    pub f: Mat,
}

pub fn finite_part(p: &Pencil, w: &WongData) -> Result<FinitePart> {
    let v = w.v_star.clone();
    let k = v.ncols();
    let d = svd(&(&p.e * &v))?;
    let u = d.u.columns(0, k).into_owned();
    let e_f = u.transpose() * &p.e * &v;
    let a_f = u.transpose() * &p.a * &v;
    let f = inverse(&e_f, "E restricted to the finite subspace")? * &a_f;
    Ok(FinitePart { u, v, e_f, a_f, f })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteEigenvalue {
    pub re: f64,
    pub im: f64,
    pub algebraic: usize,
    pub geometric: usize,
    /// Size of the largest Jordan block.
    pub largest_block: usize,
}

impl FiniteEigenvalue {
    pub fn value(&self) -> Complex<f64> {
        Complex::new(self.re, self.im)
    }

    pub fn semisimple(&self) -> bool {
        self.algebraic == self.geometric
    }
}

/// Clustered eigenvalues of `F` with geometric multiplicities and largest
/// Jordan block sizes from kernel dimensions of powers.
pub fn spectral_data(f: &Mat, tol: &TolerancePolicy) -> Result<Vec<FiniteEigenvalue>> {
    let k = f.nrows();
    if k == 0 {
        return Ok(Vec::new());
    }
    let nf = spectral_norm(f).max(1.0);
    let clusters = cluster_eigenvalues(&eigenvalues(f)?, tol.cluster_tol * nf);
    let mut out = Vec::with_capacity(clusters.len());
    for c in clusters {
        let (a, b) = (c.value.re, c.value.im);
        let id = Mat::identity(k, k);
        let shifted = f - &id * a;
        let (m, per) = if b == 0.0 { (shifted, 1) } else { (&shifted * &shifted + id * (b * b), 2) };
        let mn = spectral_norm(&m).max(nf.powi(per as i32));
        let mut power = Mat::identity(k, k);
        let mut geometric = 0;
        let mut largest = 0;
        for j in 1..=c.algebraic {
            power = &power * &m;
            let thr = tol.cluster_tol * mn.powi(j as i32);
            let dim = (k - rank_abs(&power, thr)?) / per;
            if j == 1 {
                geometric = dim;
            }
            largest = j;
            if dim >= c.algebraic {
                break;
            }
        }
        out.push(FiniteEigenvalue { re: a, im: b, algebraic: c.algebraic, geometric, largest_block: largest });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexReport {
    pub regular: bool,
    pub index: usize,
    pub finite_eigenvalues: Vec<FiniteEigenvalue>,
    pub infinite_block_dim: usize,
    /// Distance in decades between the closest singular value and the
    /// rank threshold over all decisions.
    pub decision_margin: f64,
    /// Set when the margin is below one decade; the index then reports the
    /// worse of the two candidate decisions.
    pub borderline: bool,
}

/// Differentiation index and finite spectral data of a regular pencil.
pub fn index(p: &Pencil, tol: &TolerancePolicy) -> Result<IndexReport> {
    let w = wong_sequences(p, tol)?;
    if !regularity_from(p, &w, tol)?.regular {
        return Err(Error::NotRegular);
    }
    let mut nu = w.index();
    let borderline = w.margin < 1.0;
    if borderline {
        let alt = wong_at(p, 10.0 * w.threshold)?;
        if alt.v_star.ncols() + alt.w_star.ncols() == p.n() && intersection(&alt, tol, p.n())?.is_none() {
            nu = nu.max(alt.index());
        }
    }
    let fp = finite_part(p, &w)?;
    Ok(IndexReport {
        regular: true,
        index: nu,
        finite_eigenvalues: spectral_data(&fp.f, tol)?,
        infinite_block_dim: w.w_star.ncols(),
        decision_margin: w.margin,
        borderline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn pencil(e: Mat, a: Mat) -> Pencil {
        Pencil::new(e, a).unwrap()
    }

    #[test]
    fn regularity_examples() {
        let r = regularity(&pencil(Mat::identity(3, 3), dmatrix![1.0, 2.0, 3.0; 0.0, 1.0, 0.0; 4.0, 0.0, 0.0]), &tol()).unwrap();
        assert!(r.regular && r.agree);
        let r = regularity(&pencil(dmatrix![0.0], dmatrix![0.0]), &tol()).unwrap();
        assert!(!r.regular && r.agree);
        let r = regularity(&pencil(dmatrix![1.0, 0.0; 0.0, 0.0], Mat::zeros(2, 2)), &tol()).unwrap();
        assert!(!r.regular);
        assert!(r.certificate.is_some());
    }

    #[test]
    fn index_examples() {
        assert_eq!(index(&pencil(Mat::identity(2, 2), dmatrix![0.0, 1.0; -1.0, 0.0]), &tol()).unwrap().index, 0);
        let r = index(&pencil(dmatrix![0.0, 1.0; 0.0, 0.0], Mat::identity(2, 2)), &tol()).unwrap();
        assert_eq!((r.index, r.infinite_block_dim), (2, 2));
        assert!(r.finite_eigenvalues.is_empty());
        let r = index(&pencil(dmatrix![0.0], dmatrix![1.0]), &tol()).unwrap();
        assert_eq!(r.index, 1);
        assert!(matches!(index(&pencil(dmatrix![0.0], dmatrix![0.0]), &tol()), Err(Error::NotRegular)));
    }

    #[test]
    fn multiplicities() {
        let f = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 0.0; 0.0, 0.0, -1.0];
        let s = spectral_data(&f, &tol()).unwrap();
        let zero = s.iter().find(|e| e.re.abs() < 1e-6).unwrap();
        assert_eq!((zero.algebraic, zero.geometric, zero.largest_block), (2, 1, 2));
        let rot = dmatrix![0.0, 2.0, 0.0, 0.0; -2.0, 0.0, 0.0, 0.0; 0.0, 0.0, 0.0, 2.0; 0.0, 0.0, -2.0, 0.0];
        let s = spectral_data(&rot, &tol()).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|e| e.algebraic == 2 && e.geometric == 2 && e.largest_block == 1));
    }
}

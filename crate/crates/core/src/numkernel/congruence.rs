use super::{orth_complement, skew_part, sym_part, Mat, TolerancePolicy};
use crate::error::{Error, Result};

/// `T^T S T = diag(I_p, -I_q, 0_z)`.
#[derive(Debug, Clone)]
pub struct SignatureForm {
    pub t: Mat,
    pub p: usize,
    pub q: usize,
    pub z: usize,
}

impl SignatureForm {
    pub fn canonical(&self) -> Mat {
        let mut d = Mat::zeros(self.p + self.q + self.z, self.p + self.q + self.z);
        for i in 0..self.p {
            d[(i, i)] = 1.0;
        }
        for i in self.p..self.p + self.q {
            d[(i, i)] = -1.0;
        }
        d
    }
}

/// `T^T L T = [[0, I_l, 0], [-I_l, 0, 0], [0, 0, 0]]`.
#[derive(Debug, Clone)]
pub struct SkewForm {
    pub t: Mat,
    pub l: usize,
}

impl SkewForm {
    pub fn canonical(&self) -> Mat {
        let n = self.t.ncols();
        let mut d = Mat::zeros(n, n);
        for i in 0..self.l {
            d[(i, self.l + i)] = 1.0;
            d[(self.l + i, i)] = -1.0;
        }
        d
    }
}

pub fn symmetric_congruence_signature(s: &Mat, tol: &TolerancePolicy) -> Result<SignatureForm> {
    let n = s.nrows();
    if n != s.ncols() {
        return Err(Error::DimensionMismatch("symmetric matrix must be square".into()));
    }
    let norm = s.norm();
    let res = (s - s.transpose()).norm();
    if res > tol.structure_abs(norm) {
        return Err(Error::NotSymmetric(res));
    }
    let eig = sym_part(s).symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    signature_from_eigen(&eig.eigenvalues.as_slice().to_vec(), &eig.eigenvectors, tol.rank_threshold(n, n, lmax))
}

/// Same as [`symmetric_congruence_signature`] but with an absolute zero cutoff
/// and no symmetry gate (the caller certifies symmetry).
pub fn signature_abs(s: &Mat, thr: f64) -> SignatureForm {
    if s.nrows() == 0 {
        return SignatureForm { t: Mat::zeros(0, 0), p: 0, q: 0, z: 0 };
    }
    let eig = sym_part(s).symmetric_eigen();
    signature_from_eigen(&eig.eigenvalues.as_slice().to_vec(), &eig.eigenvectors, thr)
        .expect("eigen data is consistent")
}

fn signature_from_eigen(vals: &[f64], vecs: &Mat, thr: f64) -> Result<SignatureForm> {
    let n = vals.len();
    let mut pos: Vec<usize> = (0..n).filter(|&i| vals[i] > thr).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| vals[i] < -thr).collect();
    let zero: Vec<usize> = (0..n).filter(|&i| vals[i].abs() <= thr).collect();
    pos.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    neg.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let mut t = Mat::zeros(n, n);
    let mut c = 0;
    for &i in pos.iter().chain(neg.iter()) {
        t.set_column(c, &(vecs.column(i) / vals[i].abs().sqrt()));
        c += 1;
    }
    for &i in &zero {
        t.set_column(c, &vecs.column(i));
        c += 1;
    }
    Ok(SignatureForm { t, p: pos.len(), q: neg.len(), z: zero.len() })
}

pub fn skew_congruence_canonical(l: &Mat, tol: &TolerancePolicy) -> Result<SkewForm> {
    let n = l.nrows();
    if n != l.ncols() {
        return Err(Error::DimensionMismatch("skew matrix must be square".into()));
    }
    let norm = l.norm();
    let res = (l + l.transpose()).norm();
    if res > tol.structure_abs(norm) {
        return Err(Error::NotSkewSymmetric(res));
    }
    let lmax = super::spectral_norm(l);
    Ok(skew_abs(l, tol.rank_threshold(n, n, lmax)))
}

/// Skew canonical form with an absolute cutoff on the pair frequencies.
pub fn skew_abs(l: &Mat, thr: f64) -> SkewForm {
    let n = l.nrows();
    if n == 0 {
        return SkewForm { t: Mat::zeros(0, 0), l: 0 };
    }
    let l = skew_part(l);
    // L^T L = -L^2 is PSD; within one eigenspace of frequency w every unit u
    // spans the L-invariant plane {u, Lu}.
    let eig = (l.transpose() * &l).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > thr * thr).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = order.first().map_or(0.0, |&i| eig.eigenvalues[i]);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match clusters.last_mut() {
            Some(c) if eig.eigenvalues[*c.last().unwrap()] - eig.eigenvalues[i] <= 1e-9 * top => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let mut chosen = Mat::zeros(n, 0);
    let mut firsts = Vec::new();
    let mut seconds = Vec::new();
    for c in clusters {
        let mut y = Mat::from_columns(&c.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
        while y.ncols() > 0 {
            let mut u = y.column(0).into_owned();
            u -= &chosen * (chosen.transpose() * &u);
            let un = u.norm();
            if un < 0.5 {
                break;
            }
            u /= un;
            let lu = &l * &u;
            let w = lu.norm();
            if w <= thr {
                break;
            }
            let v = -lu / w;
            chosen = super::hstack(&[&chosen, &Mat::from_columns(&[u.clone(), v.clone()])]);
            let s = w.sqrt();
            firsts.push(u / s);
            seconds.push(v / s);
            let proj = &y - &chosen * (chosen.transpose() * &y);
            y = super::image_basis_abs(&proj, 0.5);
        }
    }
    let k = firsts.len();
    let rest = orth_complement(&chosen);
    let mut cols = firsts;
    cols.extend(seconds);
    cols.extend(rest.column_iter().map(|c| c.into_owned()));
    SkewForm { t: Mat::from_columns(&cols), l: k }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn signature_diag() {
        let s = dmatrix![2.0, 0.0, 0.0; 0.0, -3.0, 0.0; 0.0, 0.0, 0.0];
        let f = symmetric_congruence_signature(&s, &tol()).unwrap();
        assert_eq!((f.p, f.q, f.z), (1, 1, 1));
        assert!((f.t.transpose() * &s * &f.t - f.canonical()).norm() < 1e-14);
        assert!((f.t[(0, 0)].abs() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((f.t[(1, 1)].abs() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn signature_swap() {
        let f = symmetric_congruence_signature(&dmatrix![0.0, 1.0; 1.0, 0.0], &tol()).unwrap();
        assert_eq!((f.p, f.q), (1, 1));
    }

    #[test]
    fn signature_rejects_nonsymmetric() {
        let r = symmetric_congruence_signature(&dmatrix![0.0, 1.0; 0.0, 0.0], &tol());
        assert!(matches!(r, Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn skew_examples() {
        let j = dmatrix![0.0, 1.0; -1.0, 0.0];
        let f = skew_congruence_canonical(&j, &tol()).unwrap();
        assert_eq!(f.l, 1);
        assert!((f.t.transpose() * &j * &f.t - f.canonical()).norm() < 1e-14);
        let f = skew_congruence_canonical(&(j.clone() * 2.0), &tol()).unwrap();
        assert!((f.t.transpose() * (&j * 2.0) * &f.t - f.canonical()).norm() < 1e-14);
        let z = skew_congruence_canonical(&Mat::zeros(3, 3), &tol()).unwrap();
        assert_eq!(z.l, 0);
        assert_eq!(z.t.shape(), (3, 3));
    }

    #[test]
    fn skew_rejects_symmetric() {
        let r = skew_congruence_canonical(&Mat::identity(2, 2), &tol());
        assert!(matches!(r, Err(Error::NotSkewSymmetric(_))));
    }

    #[test]
    fn skew_odd_dimension() {
        let l = dmatrix![0.0, 1.0, 2.0; -1.0, 0.0, 3.0; -2.0, -3.0, 0.0];
        let f = skew_congruence_canonical(&l, &tol()).unwrap();
        assert_eq!(f.l, 1);
        assert!((f.t.transpose() * &l * &f.t - f.canonical()).norm() < 1e-13);
    }
}

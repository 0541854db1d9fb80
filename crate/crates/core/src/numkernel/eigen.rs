use nalgebra::{Complex, Schur};

use super::{check_finite, Mat};
use crate::error::{Error, Result};

/// Eigenvalues of a square matrix via the real Schur form.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex<f64>>> {
    check_finite(a, "matrix")?;
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("eigenvalues need a square matrix".into()));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let s = Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    Ok(s.complex_eigenvalues().iter().copied().collect())
}

/// A group of numerically coincident eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCluster {
    pub value: Complex<f64>,
    pub algebraic: usize,
}

/// Single-linkage clustering of eigenvalues at absolute distance `radius`.
/// Conjugate clusters are reported with exactly conjugate centres.
pub fn cluster_eigenvalues(vals: &[Complex<f64>], radius: f64) -> Vec<EigenCluster> {
    let n = vals.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while l[r] != r {
            r = l[r];
        }
        l[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i] - vals[j]).norm() <= radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    let mut out: Vec<EigenCluster> = groups
        .into_iter()
        .map(|(_, idx)| {
            let sum: Complex<f64> = idx.iter().map(|&i| vals[i]).sum();
            let mut value = sum / idx.len() as f64;
            if value.im.abs() <= radius {
                value.im = 0.0;
            }
            EigenCluster { value, algebraic: idx.len() }
        })
        .collect();
    // Force exact conjugate symmetry of the centres.
    for i in 0..out.len() {
        if out[i].value.im > 0.0 {
            let c = out[i].value;
            if let Some(j) = (0..out.len()).find(|&j| j != i && (out[j].value - c.conj()).norm() <= 2.0 * radius + 1e-300) {
                out[j].value = c.conj();
            }
        }
    }
    out.sort_by(|a, b| b.value.re.total_cmp(&a.value.re).then(b.value.im.total_cmp(&a.value.im)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn rotation_eigenvalues() {
        let e = eigenvalues(&dmatrix![0.0, 1.0; -1.0, 0.0]).unwrap();
        assert_eq!(e.len(), 2);
        assert!(e.iter().all(|v| v.re.abs() < 1e-15 && (v.im.abs() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn clustering_merges_jordan_spread() {
        let vals = vec![Complex::new(1.0, 1e-9), Complex::new(1.0, -1e-9), Complex::new(-2.0, 0.0)];
        let c = cluster_eigenvalues(&vals, 1e-6);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].algebraic, 2);
        assert_eq!(c[0].value.im, 0.0);
    }
}

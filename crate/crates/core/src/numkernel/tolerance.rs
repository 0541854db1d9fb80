use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thresholds used by every rank, symmetry and eigenvalue decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Relative singular value cutoff. `None` selects `max(rows, cols) * eps`
    /// for direct rank queries and `GUARD * max(rows, cols) * eps` inside the
    /// multi-step structured algorithms.
    pub relative_rank_tol: Option<f64>,
    /// Relative tolerance for symmetry, skew-symmetry and semidefiniteness checks.
    pub structure_tol: f64,
    /// Relative tolerance for grouping eigenvalues and for the imaginary-axis band.
    pub cluster_tol: f64,
}

/// Backward-error constant applied to derived sub-blocks.
pub const GUARD: f64 = 100.0;

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            relative_rank_tol: None,
            structure_tol: 1e-10,
            cluster_tol: 1e-6,
        }
    }
}

impl TolerancePolicy {
    pub fn with_rank_tol(rel: f64) -> Self {
        TolerancePolicy {
            relative_rank_tol: Some(rel),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if self.relative_rank_tol.is_some_and(|v| !ok(v))
            || !ok(self.structure_tol)
            || !ok(self.cluster_tol)
        {
            return Err(Error::InvalidInput(
                "tolerances must be finite and strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// Absolute singular value cutoff for a single `rows x cols` matrix with
    /// largest singular value `sigma1`.
    pub fn rank_threshold(&self, rows: usize, cols: usize, sigma1: f64) -> f64 {
        let rel = self
            .relative_rank_tol
            .unwrap_or(rows.max(cols).max(1) as f64 * f64::EPSILON);
        rel * sigma1
    }

    /// Absolute cutoff shared by all rank decisions of an algorithm whose
    /// input has dimension `dim` and 2-norm `scale`.
    pub fn structural_threshold(&self, dim: usize, scale: f64) -> f64 {
        let rel = self
            .relative_rank_tol
            .unwrap_or(GUARD * dim.max(1) as f64 * f64::EPSILON);
        rel * scale
    }

    /// Absolute tolerance for structure residuals of a matrix with norm `scale`.
    pub fn structure_abs(&self, scale: f64) -> f64 {
        self.structure_tol * scale.max(1.0)
    }
}

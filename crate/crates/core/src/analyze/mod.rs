//! Analysis of unstructured pencils `lambda E - A`.

mod dh;
mod staircase;
mod wong;

pub use dh::{
    check_dh_equivalence, dh_canonicalize, verify_structured_index_law, DHCanonical, DHVariant, DHVerdict,
    IndexLaw,
};
pub use staircase::{index2_staircase, reduced_ode, Index2Staircase, ReducedOde};
pub use wong::{
    finite_part, index, regularity, wong_sequences, FiniteEigenvalue, FinitePart, IndexReport, RegularityReport,
    WongData,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{check_finite, mat_serde, spectral_norm, Mat};
use crate::structures::{DHSystem, ExtendedHDAE, MonotoneAnnihilatorSystem};

/// Square pencil `lambda E - A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pencil {
    #[serde(with = "mat_serde")]
    pub e: Mat,
    #[serde(with = "mat_serde")]
    pub a: Mat,
}

impl Pencil {
    pub fn new(e: Mat, a: Mat) -> Result<Self> {
        if e.nrows() != e.ncols() || e.shape() != a.shape() {
            return Err(Error::DimensionMismatch(format!(
                "pencil needs square matrices of equal size, got {:?} and {:?}",
                e.shape(),
                a.shape()
            )));
        }
        check_finite(&e, "E")?;
        check_finite(&a, "A")?;
        Ok(Pencil { e, a })
    }

    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    /// `max(||E||, ||A||)`, at least one.
    pub fn scale(&self) -> f64 {
        spectral_norm(&self.e).max(spectral_norm(&self.a)).max(1.0)
    }

    /// `(U^T E V, U^T A V)`.
    pub fn transform(&self, ut: &Mat, v: &Mat) -> Pencil {
        Pencil { e: ut * &self.e * v, a: ut * &self.a * v }
    }
}

impl TryFrom<&DHSystem> for Pencil {
    type Error = Error;
    fn try_from(s: &DHSystem) -> Result<Self> {
        let (e, a) = s.pencil();
        Pencil::new(e, a)
    }
}

impl TryFrom<&ExtendedHDAE> for Pencil {
    type Error = Error;
    fn try_from(s: &ExtendedHDAE) -> Result<Self> {
        let (e, a) = s.pencil();
        Pencil::new(e, a)
    }
}

impl TryFrom<&MonotoneAnnihilatorSystem> for Pencil {
    type Error = Error;
    fn try_from(s: &MonotoneAnnihilatorSystem) -> Result<Self> {
        let (e, a) = s.pencil();
        Pencil::new(e, a)
    }
}

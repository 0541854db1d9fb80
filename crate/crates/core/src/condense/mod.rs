//! Structured condensed forms of Lagrange and Dirac pairs and of extended
//! systems, each returned with explicit transformations and residuals.

mod dirac;
mod extended;
mod lagrange;

pub use dirac::{dirac_condense, dirac_staircase_orth, DiracBlocks, DiracCondensed, DiracStaircase};
pub use extended::{
    extended_condense, extract_reduced, monotone_condense, Constraint, ExtendedCondensed, ExtendedVariant,
    ReducedSystem,
};
pub use lagrange::{
    lagrange_condense, lagrange_staircase_orth, LagrangeBlocks, LagrangeCondensed, LagrangeStaircase,
};

use crate::numkernel::{cond, grid, offsets, set_block, Mat};

/// Nonorthogonal steps whose inverted diagonal exceeds this condition number
/// attach a warning to the report.
pub const COND_WARN: f64 = 1e8;

fn cond_warning(warnings: &mut Vec<String>, step: &str, m: &Mat) {
    let c = cond(m);
    if c > COND_WARN {
        warnings.push(format!("{step}: inverted block has condition number {c:.3e}"));
    }
}

/// Expected matrix on a block grid: `fixed` blocks are prescribed, `free`
/// blocks are copied from `form`, everything else is zero.
fn expected(form: &Mat, rows: &[usize], cols: &[usize], fixed: &[(usize, usize, Mat)], free: &[(usize, usize)]) -> Mat {
    let ro = offsets(rows);
    let co = offsets(cols);
    let mut out = Mat::zeros(form.nrows(), form.ncols());
    for &(i, j) in free {
        set_block(&mut out, ro[i], co[j], &grid(form, rows, cols, i, j));
    }
    for (i, j, b) in fixed {
        set_block(&mut out, ro[*i], co[*j], b);
    }
    out
}

fn ident(n: usize) -> Mat {
    Mat::identity(n, n)
}

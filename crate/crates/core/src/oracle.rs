//! Plain recursive constraint algorithm, kept independent of the feedback
//! reduction so that it can serve as a reference for it.
//!
//! Constraints `C_ζ ζ + C_u u = 0` on `(x, p, u)` are differentiated along
//! the original dynamics `ζ̇ = G⁽⁰⁾ζ + Z⁽⁰⁾u`. The combinations of rows that do
//! not involve `u̇` (left null space of `C_u`) give the next level.

use crate::error::{Error, Result};
use crate::hcapf::ReductionResult;
use crate::linalg::{
    hstack, independent_rows, rank_tol, subspace_angle, vstack, FullSvd, Matrix, Tolerance,
};
use crate::lq_model::LqProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Independent rows over `(x, p, u)`.
    pub final_constraints: Matrix,
    /// Constraint-generation passes, the final non-growing one included.
    pub index_k: usize,
}

pub fn recursive_reduce(problem: &LqProblem, tol: Tolerance) -> Result<OracleResult> {
    let init = problem.initial_matrices()?;
    let (n, m) = (problem.n(), problem.m());
    let dynamics = hstack(&[&init.g0, &init.z0]);
    let mut c = independent_rows(&hstack(&[&init.s1, &(-&init.r1)]), tol);
    let cap = 2 * n + m + 1;
    let mut k = 0;
    loop {
        k += 1;
        let next = if c.nrows() == 0 {
            c.clone()
        } else {
            let cz = c.columns(0, 2 * n).into_owned();
            let cu = c.columns(2 * n, m).into_owned();
            let svd = FullSvd::new(&cu);
            let r = svd.rank(tol);
            let left = svd.u.columns(r, c.nrows() - r).transpose();
            let derived = left * &cz * &dynamics;
            independent_rows(&vstack(&[&c, &derived]), tol)
        };
        if next.nrows() == c.nrows() {
            break;
        }
        if k >= cap {
            return Err(Error::NonConvergence { iterations: k });
        }
        c = next;
    }
    Ok(OracleResult {
        final_constraints: c,
        index_k: k,
    })
}

/// Largest principal angle between the oracle's final subspace and the one
/// reconstructed from a feedback reduction of the same problem.
///
/// Fails with `DimensionMismatch` when the two subspaces have different
/// dimensions, which is the "not computable" outcome.
pub fn compare_final_subspaces(
    a: &OracleResult,
    b: &ReductionResult,
    tol: Tolerance,
) -> Result<f64> {
    let reconstructed = b.constraint_subspace();
    let ours = &a.final_constraints;
    if ours.ncols() != reconstructed.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "oracle works on {} coordinates, reduction on {}",
            ours.ncols(),
            reconstructed.ncols()
        )));
    }
    let (ra, rb) = (rank_tol(ours, tol), rank_tol(&reconstructed, tol));
    if ra != rb {
        return Err(Error::DimensionMismatch(format!(
            "final subspaces have dimensions {ra} and {rb}"
        )));
    }
    if ra == 0 {
        return Ok(0.0);
    }
    subspace_angle(ours, &reconstructed, tol)
}

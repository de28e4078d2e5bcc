//! Convergence measures for Hessian approximations and iterates.
//!
//! All measures are returned signed: a negative `sigma` or `tau` means the
//! approximation has dropped below its target somewhere, which callers
//! treat as an invariant breach rather than something to clamp away.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, CholFactor, SymMatrix, DEFAULT_PIVOT_TOL};

fn same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `tr[(G − A) A⁻¹]`, the trace of the approximation error measured in the
/// metric of `A`.
pub fn sigma_measure(a: &SymMatrix, g: &SymMatrix) -> Result<f64> {
    same_dim(a, g)?;
    let fac = cholesky(a, DEFAULT_PIVOT_TOL)?;
    sigma_with_factor(&fac, a, g)
}

/// [`sigma_measure`] reusing a Cholesky factor of `a`.
///
/// Works on `G − A` column by column so that the result keeps its relative
/// accuracy when `G` is already close to `A`.
pub fn sigma_with_factor(a_fac: &CholFactor, a: &SymMatrix, g: &SymMatrix) -> Result<f64> {
    same_dim(a, g)?;
    let d = a.dim();
    let gap = g.sub(a)?;
    let mut total = 0.0;
    let mut col = vec![0.0; d];
    for j in 0..d {
        for (i, c) in col.iter_mut().enumerate() {
            *c = gap.get(i, j);
        }
        a_fac.solve_in_place(&mut col);
        total += col[j];
    }
    Ok(total)
}

/// `tr(G − A)`.
pub fn tau_measure(a: &SymMatrix, g: &SymMatrix) -> Result<f64> {
    same_dim(a, g)?;
    Ok((0..a.dim()).map(|i| g.get(i, i) - a.get(i, i)).sum())
}

/// Local gradient norm `sqrt(∇fᵀ [∇²f]⁻¹ ∇f)`.
pub fn lambda_measure(grad: &[f64], hess: &SymMatrix) -> Result<f64> {
    let fac = cholesky(hess, DEFAULT_PIVOT_TOL)?;
    lambda_with_factor(grad, &fac)
}

pub fn lambda_with_factor(grad: &[f64], hess_fac: &CholFactor) -> Result<f64> {
    Ok(hess_fac.inverse_quad_form(grad)?.sqrt())
}

/// `tr(G − ∇²f) / tr(∇²f)`, the relative trace gap tracked by SR1 on
/// general objectives.
pub fn eta_trace_ratio(hess: &SymMatrix, g: &SymMatrix) -> Result<f64> {
    Ok(tau_measure(hess, g)? / hess.trace())
}

/// `‖v‖_A = sqrt(vᵀ A v)`
pub fn a_norm(a: &SymMatrix, v: &[f64]) -> f64 {
    dot(v, &a.matvec(v)).max(0.0).sqrt()
}

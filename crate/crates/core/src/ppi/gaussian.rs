use nalgebra::{DMatrix, DVector};

use crate::linalg::symmetrize;
use crate::{Error, Result};

/// Gibbs posterior `N(μ, Σ)·exp(−α f)` for a quadratic `f` with gradient
/// `grad` (at `μ`) and Hessian `hess`:
///
/// `Σ' = (Σ⁻¹ + α∇²f)⁻¹`, `μ' = μ − α Σ' ∇f`.
pub fn gaussian_quadratic_posterior(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    grad: &DVector<f64>,
    hess: &DMatrix<f64>,
    alpha: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = mu.len();
    if sigma.shape() != (n, n) || hess.shape() != (n, n) || grad.len() != n {
        return Err(Error::invalid("dimension mismatch in Gaussian update"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha must be non-negative"));
    }
    if alpha == 0.0 {
        return Ok((mu.clone(), sigma.clone()));
    }
    let precision = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("prior covariance is not positive definite"))?
        .inverse()
        + hess * alpha;
    let chol = symmetrize(&precision)
        .cholesky()
        .ok_or_else(|| Error::numerical("posterior precision is not positive definite (indefinite Hessian)"))?;
    let sigma_next = symmetrize(&chol.inverse());
    let mu_next = mu - &sigma_next * grad * alpha;
    Ok((mu_next, sigma_next))
}

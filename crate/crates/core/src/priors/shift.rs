//! Moving a Gaussian process posterior to a new time window.

use nalgebra::DMatrix;

use super::kernel::{factored_gram, kernel_cross, kernel_gram, Kernel, TimeGrid};
use super::matrix_normal::MatrixNormalPolicy;
use crate::linalg::{factor_psd, symmetrize};
use crate::{Error, Result};

/// Precomputed prior quantities for shifting between two fixed grids.
///
/// For a stationary kernel these depend only on `dt`, `H` and the offset
/// between the grids, so one operator serves every controller step.
#[derive(Debug, Clone)]
pub struct ShiftOperator {
    pub kernel: Kernel,
    pub jitter: f64,
    pub k_old: DMatrix<f64>,
    pub k_new: DMatrix<f64>,
    /// `K(new, old)`.
    pub k_cross: DMatrix<f64>,
    /// `K_old⁻¹ K(new, old)ᵀ`.
    gain: DMatrix<f64>,
    /// `K_new − K(new, old) K_old⁻¹ K(new, old)ᵀ`.
    schur: DMatrix<f64>,
    k_old_factor: crate::linalg::PsdFactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shifted {
    pub mean: DMatrix<f64>,
    pub k: DMatrix<f64>,
    /// `K_old⁻¹ (μ_post − μ_prior)`.
    pub nu: DMatrix<f64>,
    /// `K_old⁻¹ (K_old − K_post) K_old⁻¹`.
    pub lambda: DMatrix<f64>,
}

impl ShiftOperator {
    pub fn new(old: &TimeGrid, new: &TimeGrid, kernel: Kernel) -> Result<Self> {
        let jitter = kernel.default_jitter();
        let (k_old, k_old_factor) = factored_gram(old, &kernel, jitter)?;
        let k_new = kernel_gram(new, &kernel, jitter)?;
        let k_cross = kernel_cross(new, old, &kernel, jitter)?;
        let gain = k_old_factor.solve(&k_cross.transpose());
        let v = k_old_factor
            .lower()
            .solve_lower_triangular(&k_cross.transpose())
            .ok_or_else(|| Error::numerical("prior Gram factor is singular"))?;
        let schur = &k_new - v.transpose() * &v;
        Ok(Self { kernel, jitter, k_old, k_new, k_cross, gain, schur, k_old_factor })
    }

    /// Shift a posterior `(μ_post, K_post)` whose prior mean is
    /// `prior_old` to the new grid, where the prior mean is `prior_new`.
    pub fn apply(
        &self,
        prior_old: &DMatrix<f64>,
        prior_new: &DMatrix<f64>,
        post_mean: &DMatrix<f64>,
        post_k: &DMatrix<f64>,
        gamma: f64,
    ) -> Result<Shifted> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid("gamma must lie in [0, 1]"));
        }
        let h_old = self.k_old.nrows();
        if post_k.shape() != (h_old, h_old) || post_mean.nrows() != h_old || prior_old.shape() != post_mean.shape() {
            return Err(Error::invalid("posterior shape does not match the old grid"));
        }
        if prior_new.nrows() != self.k_new.nrows() || prior_new.ncols() != post_mean.ncols() {
            return Err(Error::invalid("prior mean shape does not match the new grid"));
        }
        let delta = post_mean - prior_old;
        let mean = prior_new + self.gain.transpose() * &delta;
        // K_new − γ Gᵀ(K_old − K_post)G, regrouped so that each term is PSD:
        // (1−γ) K_new + γ (K_new − K_cross G) + γ Gᵀ K_post G.
        let k = if gamma == 0.0 {
            self.k_new.clone()
        } else {
            let carried = self.gain.transpose() * post_k * &self.gain;
            symmetrize(&(&self.k_new * (1.0 - gamma) + &self.schur * gamma + carried * gamma))
        };
        factor_psd(&k, self.jitter)?;
        let reduction = &self.k_old - post_k;
        let nu = self.k_old_factor.solve(&delta);
        let lambda = symmetrize(&self.k_old_factor.solve(&self.k_old_factor.solve(&reduction).transpose()));
        Ok(Shifted { mean, k, nu, lambda })
    }
}

/// Shift the posterior over `old_grid` to `new_grid` (Gaussian process
/// posterior moments computed with the prior kernel's cross-covariance).
pub fn gp_shift(
    prior: &MatrixNormalPolicy,
    posterior_mean: &DMatrix<f64>,
    posterior_k: &DMatrix<f64>,
    old_grid: &TimeGrid,
    new_grid: &TimeGrid,
    gamma: f64,
) -> Result<Shifted> {
    let op = ShiftOperator::new(old_grid, new_grid, prior.kernel)?;
    let prior_old = MatrixNormalPolicy::prior_mean_rows(old_grid.len, &prior.mean_offset);
    let prior_new = MatrixNormalPolicy::prior_mean_rows(new_grid.len, &prior.mean_offset);
    op.apply(&prior_old, &prior_new, posterior_mean, posterior_k, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn prior(h: usize) -> MatrixNormalPolicy {
        let g = TimeGrid::new(0.0, 0.02, h).unwrap();
        MatrixNormalPolicy::from_kernel(g, Kernel::se(0.03, 1.0), DMatrix::identity(1, 1), DVector::from_element(1, 0.3))
            .unwrap()
    }

    #[test]
    fn prior_shifts_to_prior() {
        let p = prior(8);
        let new = p.grid.advanced(1);
        let s = gp_shift(&p, &p.mean, &p.k, &p.grid, &new, 1.0).unwrap();
        assert!((s.mean - p.prior_mean()).abs().max() < 1e-12);
        let k_new = kernel_gram(&new, &p.kernel, p.kernel.default_jitter()).unwrap();
        assert!((s.k - k_new).abs().max() < 1e-12);
        assert!(s.nu.abs().max() < 1e-12);
        assert!(s.lambda.abs().max() < 1e-12);
    }

    #[test]
    fn white_kernel_gamma_zero_keeps_prior_covariance_exactly() {
        let g = TimeGrid::new(0.0, 0.02, 6).unwrap();
        let kern = Kernel::White { variance: 2.0 };
        let p = MatrixNormalPolicy::from_kernel(g, kern, DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
        let post_k = &p.k * 0.3;
        let post_m = DMatrix::from_fn(6, 1, |i, _| i as f64);
        let new = g.advanced(1);
        let s = gp_shift(&p, &post_m, &post_k, &g, &new, 0.0).unwrap();
        assert_eq!(s.k, kernel_gram(&new, &kern, kern.default_jitter()).unwrap());
        // the overlap carries the posterior mean, the new tail reverts to the prior
        assert!((s.mean[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(s.mean[(5, 0)], 0.0);
    }

    #[test]
    fn bad_gamma_rejected() {
        let p = prior(4);
        assert!(gp_shift(&p, &p.mean, &p.k, &p.grid, &p.grid, 1.5).is_err());
    }
}

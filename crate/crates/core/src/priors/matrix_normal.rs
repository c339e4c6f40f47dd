use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::kernel::{kernel_gram, Kernel, TimeGrid};
use crate::linalg::{factor_psd, is_symmetric, symmetrize};
use crate::{Error, Result};

/// Matrix normal distribution over `H×d_a` action sequences with temporal
/// covariance `K` and action covariance `Σ`, i.e. `vec(X) ~ N(vec(M), Σ⊗K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixNormalPolicy {
    pub mean: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub grid: TimeGrid,
    pub kernel: Kernel,
    pub mean_offset: DVector<f64>,
}

impl MatrixNormalPolicy {
    /// Stationary prior: constant mean `mean_offset` and `K` from `kernel` on `grid`.
    pub fn from_kernel(grid: TimeGrid, kernel: Kernel, sigma: DMatrix<f64>, mean_offset: DVector<f64>) -> Result<Self> {
        let d = mean_offset.len();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::invalid(format!(
                "Σ is {}×{} but the mean offset has {d} entries",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let k = kernel_gram(&grid, &kernel, kernel.default_jitter())?;
        let policy = Self { mean: Self::prior_mean_rows(grid.len, &mean_offset), k, sigma, grid, kernel, mean_offset };
        policy.validate()?;
        Ok(policy)
    }

    /// Prior centred between the limits with `σᵢ = (a_max − a_min)/2`.
    pub fn from_actuator_limits(grid: TimeGrid, kernel: Kernel, limits: &[(f64, f64)]) -> Result<Self> {
        for &(lo, hi) in limits {
            if !(lo < hi) {
                return Err(Error::invalid(format!("actuator limit [{lo}, {hi}] is empty")));
            }
        }
        let offset = DVector::from_iterator(limits.len(), limits.iter().map(|&(lo, hi)| 0.5 * (lo + hi)));
        let sigma = DMatrix::from_diagonal(&DVector::from_iterator(
            limits.len(),
            limits.iter().map(|&(lo, hi)| 0.25 * (hi - lo) * (hi - lo)),
        ));
        Self::from_kernel(grid, kernel, sigma, offset)
    }

    pub(crate) fn prior_mean_rows(h: usize, offset: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(h, offset.len(), |_, j| offset[j])
    }

    pub fn prior_mean(&self) -> DMatrix<f64> {
        Self::prior_mean_rows(self.grid.len, &self.mean_offset)
    }

    pub fn horizon(&self) -> usize {
        self.grid.len
    }

    pub fn action_dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, d) = (self.grid.len, self.sigma.nrows());
        if self.mean.shape() != (h, d) || self.k.shape() != (h, h) || self.sigma.shape() != (d, d) {
            return Err(Error::invalid("matrix normal dimensions are inconsistent"));
        }
        for (name, m) in [("K", &self.k), ("Σ", &self.sigma)] {
            if !is_symmetric(m, 1e-10) {
                return Err(Error::invalid(format!("{name} is not symmetric")));
            }
            let lo = m.clone().symmetric_eigenvalues().min();
            if lo < -1e-8 {
                return Err(Error::invalid(format!("{name} has eigenvalue {lo:.3e}")));
            }
        }
        Ok(())
    }

    /// Dense covariance of the column-stacked sample, `Σ⊗K`.
    pub fn vec_covariance(&self) -> DMatrix<f64> {
        self.sigma.kronecker(&self.k)
    }
}

/// Draws `count` samples `X = M + A W B` with `K = AAᵀ` and `Σ = BᵀB`.
pub fn mavn_sample<R: Rng + ?Sized>(policy: &MatrixNormalPolicy, count: usize, rng: &mut R) -> Result<Vec<DMatrix<f64>>> {
    let jitter = policy.kernel.default_jitter();
    let a = factor_psd(&policy.k, jitter)?.lower();
    let b = factor_psd(&policy.sigma, 1e-8 * policy.sigma.diagonal().max().max(f64::MIN_POSITIVE))?
        .lower()
        .transpose();
    let (h, d) = policy.mean.shape();
    Ok((0..count)
        .map(|_| {
            let w = DMatrix::from_fn(h, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            &policy.mean + &a * w * &b
        })
        .collect())
}

/// Weighted maximum likelihood fit with `Σ` held fixed.
///
/// Returns the weighted mean and `K = Σₙ wₙ (Xₙ−C) Σ⁻¹ (Xₙ−C)ᵀ / d_a`,
/// symmetrized with `jitter` added to its diagonal.
pub fn mavn_weighted_mle(
    samples: &[DMatrix<f64>],
    weights: &[f64],
    centre: &DMatrix<f64>,
    sigma_fixed: &DMatrix<f64>,
    jitter: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if samples.is_empty() || samples.len() != weights.len() {
        return Err(Error::invalid(format!("{} samples but {} weights", samples.len(), weights.len())));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::invalid(format!("weights must be non-negative and sum to 1 (sum {total})")));
    }
    let (h, d) = centre.shape();
    if samples.iter().any(|x| x.shape() != (h, d)) || sigma_fixed.shape() != (d, d) {
        return Err(Error::invalid("sample, centre and Σ shapes disagree"));
    }
    let sigma_inv = sigma_fixed
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("fixed action covariance is singular"))?
        .inverse();
    let mut mean = DMatrix::zeros(h, d);
    let mut k = DMatrix::zeros(h, h);
    for (x, &w) in samples.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        mean += x * w;
        let r = x - centre;
        k += (&r * &sigma_inv * r.transpose()) * w;
    }
    let mut k = symmetrize(&(k / d as f64));
    for i in 0..h {
        k[(i, i)] += jitter;
    }
    Ok((mean, k))
}

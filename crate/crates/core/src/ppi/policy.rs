use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::Rng;

use crate::linalg::factor_psd;
use crate::priors::{clip_to_limits, mavn_sample, mavn_weighted_mle, FeaturePolicy, MatrixNormalPolicy, TimeGrid};
use crate::{Error, Result};

/// ESS below which a fit is flagged as low-ESS.
pub const LOW_ESS: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    MatrixNormal(MatrixNormalPolicy),
    Features(FeaturePolicy),
}

impl Policy {
    pub fn grid(&self) -> TimeGrid {
        match self {
            Policy::MatrixNormal(p) => p.grid,
            Policy::Features(p) => p.grid,
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            Policy::MatrixNormal(p) => p.grid.len,
            Policy::Features(p) => p.grid.len,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            Policy::MatrixNormal(p) => p.sigma.nrows(),
            Policy::Features(p) => p.sigma.nrows(),
        }
    }

    /// Parameter samples: action sequences for the matrix normal, weight matrices for features.
    pub fn sample_parameters<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<DMatrix<f64>>> {
        match self {
            Policy::MatrixNormal(p) => mavn_sample(p, count, rng),
            Policy::Features(p) => p.sample_weights(count, rng),
        }
    }

    /// Action sequences for a batch of parameter samples.
    pub fn actions(&self, params: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
        match self {
            Policy::MatrixNormal(_) => Ok(params.to_vec()),
            Policy::Features(p) => {
                let phi = p.design()?;
                Ok(params.iter().map(|w| p.actions(&phi, w)).collect())
            }
        }
    }

    pub fn mean_actions(&self) -> Result<DMatrix<f64>> {
        match self {
            Policy::MatrixNormal(p) => Ok(p.mean.clone()),
            Policy::Features(p) => p.mean_actions(),
        }
    }

    /// Log-determinant of the temporal (or weight) covariance.
    pub fn temporal_log_det(&self) -> Result<f64> {
        let k = match self {
            Policy::MatrixNormal(p) => &p.k,
            Policy::Features(p) => &p.w_cov,
        };
        Ok(factor_psd(k, 0.0)?.log_det())
    }

    /// Entropy up to constants: `d_a log|K| + H log|Σ|` (features: `d_a log|W_cov| + d_φ log|Σ|`).
    pub fn entropy_proxy(&self) -> Result<f64> {
        let (rows, sigma) = match self {
            Policy::MatrixNormal(p) => (p.k.nrows(), &p.sigma),
            Policy::Features(p) => (p.w_cov.nrows(), &p.sigma),
        };
        let d = sigma.nrows() as f64;
        Ok(d * self.temporal_log_det()? + rows as f64 * factor_psd(sigma, 0.0)?.log_det())
    }

    pub fn jitter(&self) -> f64 {
        match self {
            Policy::MatrixNormal(p) => p.kernel.default_jitter(),
            Policy::Features(p) => 1e-8 * p.w_cov.diagonal().max().max(f64::MIN_POSITIVE),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub policy: Policy,
    pub low_ess: bool,
}

/// Weighted maximum likelihood fit of the policy to weighted parameter samples.
///
/// Matrix normal samples are clipped to `limits` before fitting when given.
pub fn m_projection(
    policy: &Policy,
    params: &[DMatrix<f64>],
    weights: &[f64],
    limits: Option<&[(f64, f64)]>,
) -> Result<Projection> {
    if params.len() != weights.len() || params.is_empty() {
        return Err(Error::invalid("parameter and weight counts differ"));
    }
    let ess = crate::weights::effective_sample_size(weights)?;
    let low_ess = ess < LOW_ESS;
    let jitter = policy.jitter();
    let policy = match policy {
        Policy::MatrixNormal(p) => {
            let clipped;
            let samples = match limits {
                Some(l) => {
                    clipped = params.iter().map(|x| clip_to_limits(x, l).map(|c| c.0)).collect::<Result<Vec<_>>>()?;
                    &clipped[..]
                }
                None => params,
            };
            let mut centre = DMatrix::zeros(p.mean.nrows(), p.mean.ncols());
            for (x, &w) in samples.iter().zip(weights) {
                centre += x * w;
            }
            let (mean, k) = mavn_weighted_mle(samples, weights, &centre, &p.sigma, jitter)?;
            Policy::MatrixNormal(MatrixNormalPolicy { mean, k, ..p.clone() })
        }
        Policy::Features(p) => {
            let mut next = p.clone();
            next.fit(params, weights, jitter)?;
            Policy::Features(next)
        }
    };
    Ok(Projection { policy, low_ess })
}

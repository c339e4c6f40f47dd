//! Smoothing and coloured-noise baselines, one-step conditional sampling and
//! actuator clipping.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::spectral::{fft, ifft};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothingVariant {
    /// `nₜ = β vₜ + (1−β) nₜ₋₁`
    NoiseSmoothing,
    /// `aₜ = β (μₜ + Lₜ vₜ) + (1−β) aₜ₋₁`
    ActionSmoothing,
    /// `nₜ = β vₜ + √(1−β²) nₜ₋₁`
    VariancePreserving,
    /// Power spectrum `∝ 1/f^exponent`.
    Coloured { beta_exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    pub variant: SmoothingVariant,
    pub beta: f64,
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("smoothing beta {} outside [0, 1]", self.beta)));
        }
        if let SmoothingVariant::Coloured { beta_exponent } = self.variant {
            if !(beta_exponent >= 0.0) {
                return Err(Error::invalid("coloured noise exponent must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Per-step Gaussian base policy: mean rows `μₜ` (`H×d`) and Cholesky factors `Lₜ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGaussian {
    pub mean: DMatrix<f64>,
    pub chol: Vec<DMatrix<f64>>,
}

impl StepGaussian {
    /// Same covariance factor at every step.
    pub fn constant(mean: DMatrix<f64>, chol: DMatrix<f64>) -> Self {
        let h = mean.nrows();
        Self { mean, chol: alloc::vec![chol; h] }
    }
}

pub fn smoothed_noise_sequence<R: Rng + ?Sized>(
    config: &SmoothingConfig,
    base: &StepGaussian,
    count: usize,
    rng: &mut R,
) -> Result<Vec<DMatrix<f64>>> {
    config.validate()?;
    let (h, d) = base.mean.shape();
    if base.chol.len() != h || base.chol.iter().any(|l| l.shape() != (d, d)) {
        return Err(Error::invalid("per-step factors do not match the mean"));
    }
    if matches!(config.variant, SmoothingVariant::Coloured { .. }) && h < 2 {
        return Err(Error::invalid("coloured noise needs at least two steps"));
    }
    let beta = config.beta;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut a = DMatrix::zeros(h, d);
        match config.variant {
            SmoothingVariant::Coloured { beta_exponent } => {
                let mut n = DMatrix::zeros(h, d);
                for j in 0..d {
                    n.set_column(j, &DVector::from_vec(coloured_noise(beta_exponent, h, rng)));
                }
                for t in 0..h {
                    let v = n.row(t).transpose();
                    a.set_row(t, &(base.mean.row(t) + (&base.chol[t] * v).transpose()));
                }
            }
            SmoothingVariant::ActionSmoothing => {
                for t in 0..h {
                    let v = white(d, rng);
                    let raw = base.mean.row(t) + (&base.chol[t] * v).transpose();
                    if t == 0 {
                        a.set_row(0, &raw);
                    } else {
                        let prev = a.row(t - 1).into_owned();
                        a.set_row(t, &(raw * beta + prev * (1.0 - beta)));
                    }
                }
            }
            SmoothingVariant::NoiseSmoothing | SmoothingVariant::VariancePreserving => {
                let carry = if config.variant == SmoothingVariant::NoiseSmoothing {
                    1.0 - beta
                } else {
                    (1.0 - beta * beta).sqrt()
                };
                let mut n = white(d, rng);
                for t in 0..h {
                    if t > 0 {
                        n = white(d, rng) * beta + n * carry;
                    }
                    a.set_row(t, &(base.mean.row(t) + (&base.chol[t] * &n).transpose()));
                }
            }
        }
        out.push(a);
    }
    Ok(out)
}

fn white<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Unit-variance Gaussian noise of length `len` with power spectrum `∝ 1/f^exponent`.
///
/// White noise is transformed, its bins scaled by `f^(−exponent/2)` with the
/// DC bin removed, transformed back and divided by the theoretical standard
/// deviation of the result.
pub fn coloured_noise<R: Rng + ?Sized>(exponent: f64, len: usize, rng: &mut R) -> Vec<f64> {
    if len < 2 {
        return (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    }
    let w: Vec<Complex64> = (0..len).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect();
    let gains: Vec<f64> = (0..len)
        .map(|k| {
            let f = k.min(len - k);
            if f == 0 {
                0.0
            } else {
                (f as f64).powf(-exponent / 2.0)
            }
        })
        .collect();
    let power = gains.iter().map(|g| g * g).sum::<f64>() / len as f64;
    let shaped: Vec<Complex64> = fft(&w).iter().zip(&gains).map(|(x, g)| x * *g).collect();
    let scale = 1.0 / power.sqrt();
    ifft(&shaped).iter().map(|x| x.re * scale).collect()
}

/// Joint Gaussian moments of two consecutive actions.
#[derive(Debug, Clone, PartialEq)]
pub struct OneStepJoint {
    pub mu_t: DVector<f64>,
    pub mu_prev: DVector<f64>,
    pub sigma_t: DMatrix<f64>,
    pub sigma_prev: DMatrix<f64>,
    /// `Cov(aₜ, aₜ₋₁)`.
    pub sigma_cross: DMatrix<f64>,
}

impl OneStepJoint {
    /// Mean and covariance of `aₜ | aₜ₋₁ = a_prev`.
    pub fn conditional(&self, a_prev: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let chol = self
            .sigma_prev
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numerical("previous-step covariance is singular"))?;
        let gain_t = chol.solve(&self.sigma_cross.transpose());
        let mean = &self.mu_t + gain_t.transpose() * (a_prev - &self.mu_prev);
        let cov = &self.sigma_t - gain_t.transpose() * self.sigma_cross.transpose();
        Ok((mean, crate::linalg::symmetrize(&cov)))
    }
}

pub fn conditional_gibbs_sample<R: Rng + ?Sized>(
    joint: &OneStepJoint,
    a_prev: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let (mean, cov) = joint.conditional(a_prev)?;
    let l = crate::linalg::factor_psd(&cov, 1e-12)?.lower();
    Ok(mean + l * white(cov.nrows(), rng))
}

/// Element-wise clamp of a `T×d` sequence to per-dimension limits; the flag
/// reports whether anything was clipped.
pub fn clip_to_limits(actions: &DMatrix<f64>, limits: &[(f64, f64)]) -> Result<(DMatrix<f64>, bool)> {
    if limits.len() != actions.ncols() {
        return Err(Error::invalid(format!("{} limits for {} action dims", limits.len(), actions.ncols())));
    }
    if limits.iter().any(|(lo, hi)| !(lo < hi)) {
        return Err(Error::invalid("each limit needs a_min < a_max"));
    }
    let mut clipped = false;
    let out = DMatrix::from_fn(actions.nrows(), actions.ncols(), |i, j| {
        let (lo, hi) = limits[j];
        let v = actions[(i, j)];
        let c = v.clamp(lo, hi);
        clipped |= c != v;
        c
    });
    Ok((out, clipped))
}

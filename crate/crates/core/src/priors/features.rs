//! Finite-feature approximations of the squared exponential kernel.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use super::kernel::TimeGrid;
use crate::linalg::{factor_psd, symmetrize};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureKind {
    /// `d` Gaussian bumps on a padded span around the horizon.
    NormalizedRbf { d: usize, lengthscale: f64 },
    /// Deterministic Fourier features from Gauss–Hermite quadrature; `2ν` features.
    QuadratureRff { nu: usize, lengthscale: f64 },
}

impl FeatureKind {
    pub fn dim(&self) -> usize {
        match *self {
            FeatureKind::NormalizedRbf { d, .. } => d,
            FeatureKind::QuadratureRff { nu, .. } => 2 * nu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FeatureKind::NormalizedRbf { d, lengthscale } => d >= 2 && lengthscale > 0.0,
            FeatureKind::QuadratureRff { nu, lengthscale } => nu >= 1 && lengthscale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid feature kind {self:?}")))
        }
    }

    /// Feature vector at time `t`; `horizon` places the RBF centres and is ignored by QRFF.
    pub fn eval(&self, t: f64, horizon: (f64, f64)) -> Result<DVector<f64>> {
        match *self {
            FeatureKind::NormalizedRbf { d, lengthscale } => rbf_feature_map(t, d, lengthscale, horizon),
            FeatureKind::QuadratureRff { nu, lengthscale } => qrff_feature_map(t, nu, lengthscale),
        }
    }

    /// `H×d_φ` matrix with rows `φ(tᵢ)ᵀ`.
    pub fn design(&self, grid: &TimeGrid, horizon: (f64, f64)) -> Result<DMatrix<f64>> {
        self.validate()?;
        let mut phi = DMatrix::zeros(grid.len, self.dim());
        for i in 0..grid.len {
            phi.set_row(i, &self.eval(grid.time(i), horizon)?.transpose());
        }
        Ok(phi)
    }
}

/// Padding of the RBF centre span on each side, in lengthscales.
pub const RBF_PADDING: f64 = 2.0;

/// Normalized RBF features with `λ = l/√2` and centres spaced linearly over
/// `[t_lo − 2l, t_hi + 2l]`, scaled so that `φ(t)ᵀφ(t′)` approximates a
/// unit-variance SE kernel with lengthscale `l`.
pub fn rbf_feature_map(t: f64, d: usize, lengthscale: f64, horizon: (f64, f64)) -> Result<DVector<f64>> {
    let (lo, hi) = horizon;
    if d < 2 || !(lo < hi) || !(lengthscale > 0.0) {
        return Err(Error::invalid(format!("rbf features need d ≥ 2, l > 0 and t_lo < t_hi (d={d}, l={lengthscale})")));
    }
    let pad = RBF_PADDING * lengthscale;
    let (a, b) = (lo - pad, hi + pad);
    let width = b - a;
    let lambda = lengthscale / 2.0.sqrt();
    let amplitude = (width / (PI.sqrt() * d as f64 * lambda)).sqrt();
    Ok(DVector::from_fn(d, |i, _| {
        let c = a + width * i as f64 / (d - 1) as f64;
        let z = (t - c) / lambda;
        amplitude * (-0.5 * z * z).exp()
    }))
}

/// Quadrature Fourier features `[a cos(ω t), a sin(ω t)]` over the `ν`
/// positive nodes `u` of the `2ν`-point Gauss–Hermite rule, with
/// `ω = √2 u / l` and `a = √(2v/√π)`.
pub fn qrff_feature_map(t: f64, nu: usize, lengthscale: f64) -> Result<DVector<f64>> {
    let (omega, amp) = qrff_frequencies(nu, lengthscale)?;
    Ok(qrff_eval(t, &omega, &amp))
}

fn qrff_eval(t: f64, omega: &[f64], amp: &[f64]) -> DVector<f64> {
    let nu = omega.len();
    DVector::from_fn(2 * nu, |j, _| {
        if j < nu {
            amp[j] * (omega[j] * t).cos()
        } else {
            amp[j - nu] * (omega[j - nu] * t).sin()
        }
    })
}

fn qrff_frequencies(nu: usize, lengthscale: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if nu == 0 || !(lengthscale > 0.0) {
        return Err(Error::invalid("qrff features need ν ≥ 1 and l > 0"));
    }
    let (nodes, weights) = gauss_hermite(2 * nu)?;
    // nodes are ascending and symmetric; the upper half is strictly positive
    let omega = nodes[nu..].iter().map(|u| 2.0.sqrt() * u / lengthscale).collect();
    let amp = weights[nu..].iter().map(|v| (2.0 * v / PI.sqrt()).sqrt()).collect();
    Ok((omega, amp))
}

/// Nodes (ascending) and weights of the `n`-point Gauss–Hermite rule for the
/// weight `exp(−x²)`.
///
/// Nodes come from the eigenvalues of the Jacobi matrix, are refined by
/// Newton steps on the orthonormal Hermite polynomial, and the weights use
/// the Christoffel form `1 / Σₖ h̃ₖ(x)²`.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("quadrature order must be positive"));
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, p_prev, _) = hermite_orthonormal(n, *x);
            let dp = (2.0 * n as f64).sqrt() * p_prev;
            if dp != 0.0 {
                *x -= p / dp;
            }
        }
        let (_, _, sum_sq) = hermite_orthonormal(n, *x);
        weights.push(1.0 / sum_sq);
    }
    // exact symmetry about zero
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(h̃ₙ(x), h̃ₙ₋₁(x), Σ_{k<n} h̃ₖ(x)²)` for the orthonormal Hermite polynomials.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += cur * cur;
        let next = (2.0 / (k + 1) as f64).sqrt() * x * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev, sum_sq)
}

/// Bayesian linear action model `aₜ = offset + φ(t)ᵀ W` with
/// `W ~ MN(W_mean, W_cov, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePolicy {
    pub kind: FeatureKind,
    pub w_mean: DMatrix<f64>,
    pub w_cov: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub grid: TimeGrid,
    /// Span used to place RBF centres.
    pub horizon: (f64, f64),
    pub mean_offset: DVector<f64>,
}

impl FeaturePolicy {
    /// Prior with zero weight mean and `W_cov = variance·I`.
    pub fn prior(
        kind: FeatureKind,
        variance: f64,
        grid: TimeGrid,
        horizon: (f64, f64),
        sigma: DMatrix<f64>,
        mean_offset: DVector<f64>,
    ) -> Result<Self> {
        kind.validate()?;
        if !(variance > 0.0) || sigma.shape() != (mean_offset.len(), mean_offset.len()) {
            return Err(Error::invalid("feature prior needs positive variance and matching Σ"));
        }
        let p = kind.dim();
        Ok(Self {
            kind,
            w_mean: DMatrix::zeros(p, mean_offset.len()),
            w_cov: DMatrix::identity(p, p) * variance,
            sigma,
            grid,
            horizon,
            mean_offset,
        })
    }

    pub fn design(&self) -> Result<DMatrix<f64>> {
        self.kind.design(&self.grid, self.horizon)
    }

    /// Action sequence for a weight matrix.
    pub fn actions(&self, phi: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = phi * w;
        for mut row in a.row_iter_mut() {
            row += self.mean_offset.transpose();
        }
        a
    }

    pub fn mean_actions(&self) -> Result<DMatrix<f64>> {
        Ok(self.actions(&self.design()?, &self.w_mean))
    }

    pub fn sample_weights<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<DMatrix<f64>>> {
        let a = factor_psd(&self.w_cov, 1e-10)?.lower();
        let b = factor_psd(&self.sigma, 1e-10)?.lower().transpose();
        let (p, d) = self.w_mean.shape();
        Ok((0..count)
            .map(|_| {
                let z = DMatrix::from_fn(p, d, |_, _| rng.sample::<f64, _>(StandardNormal));
                &self.w_mean + &a * z * &b
            })
            .collect())
    }

    /// Weighted fit of the weight mean and covariance, `Σ` fixed.
    pub fn fit(&mut self, samples: &[DMatrix<f64>], weights: &[f64], jitter: f64) -> Result<()> {
        let sigma_inv = self
            .sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numerical("fixed action covariance is singular"))?
            .inverse();
        let (p, d) = self.w_mean.shape();
        let mut mean = DMatrix::zeros(p, d);
        for (w, &wt) in samples.iter().zip(weights) {
            mean += w * wt;
        }
        let mut cov = DMatrix::zeros(p, p);
        for (w, &wt) in samples.iter().zip(weights) {
            let r = w - &mean;
            cov += (&r * &sigma_inv * r.transpose()) * wt;
        }
        let mut cov = symmetrize(&(cov / d as f64));
        for i in 0..p {
            cov[(i, i)] += jitter;
        }
        self.w_mean = mean;
        self.w_cov = cov;
        Ok(())
    }

    /// Move the evaluation window; weights are untouched.
    pub fn shifted(&self, grid: TimeGrid) -> Self {
        Self { grid, ..self.clone() }
    }
}

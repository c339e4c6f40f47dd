//! Self-normalized Gibbs importance weights and the objectives used to pick
//! their inverse temperature.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Episodic returns of `N` sampled parameter vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnBatch {
    returns: Vec<f64>,
    r_inf: Option<f64>,
}

impl ReturnBatch {
    pub fn new(returns: Vec<f64>) -> Result<Self> {
        if returns.len() < 2 {
            return Err(Error::invalid(format!(
                "a return batch needs at least 2 returns, got {}",
                returns.len()
            )));
        }
        if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::invalid(format!("return {i} is not finite")));
        }
        Ok(Self { returns, r_inf: None })
    }

    /// Supplies the bound `‖R‖∞` explicitly instead of estimating it.
    pub fn with_r_inf(mut self, r_inf: f64) -> Result<Self> {
        if !(r_inf.is_finite() && r_inf >= 0.0) {
            return Err(Error::invalid("r_inf must be finite and non-negative"));
        }
        if r_inf < self.range() {
            return Err(Error::invalid(format!(
                "r_inf = {r_inf} is below the range of the shifted returns ({})",
                self.range()
            )));
        }
        self.r_inf = Some(r_inf);
        Ok(self)
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.returns.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.returns.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    /// All returns identical: the batch carries no information about `α`.
    pub fn is_degenerate(&self) -> bool {
        self.range() == 0.0
    }

    pub fn explicit_r_inf(&self) -> Option<f64> {
        self.r_inf
    }

    /// `‖R‖∞`: the explicit value if supplied, otherwise the range `max R − min R`,
    /// which bounds the returns once they are shifted so that `max R = 0`.
    pub fn r_inf(&self) -> f64 {
        self.r_inf.unwrap_or_else(|| self.range())
    }

    /// Returns shifted by `−max R`, so every entry is `≤ 0`.
    pub fn shifted(&self) -> ReturnBatch {
        let m = self.max();
        ReturnBatch {
            returns: self.returns.iter().map(|r| r - m).collect(),
            r_inf: self.r_inf,
        }
    }
}

/// Normalized importance weights with their temperature and effective sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsWeights {
    pub weights: Vec<f64>,
    /// Inverse temperature; `+∞` for elite (hard-threshold) weights.
    pub alpha: f64,
    pub ess: f64,
}

impl GibbsWeights {
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: alloc::vec![1.0 / n as f64; n],
            alpha: 0.0,
            ess: n as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ wₙ Rₙ`.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, r)| w * r).sum()
    }

    /// Empirical KL divergence of the weights from the uniform distribution, `Σ wₙ log(N wₙ)`.
    pub fn kl_from_uniform(&self) -> f64 {
        let n = self.weights.len() as f64;
        self.weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| w * (n * w).ln())
            .sum()
    }
}

/// `wₙ ∝ exp(α Rₙ)`, normalized, computed with the maximum subtracted.
pub fn compute_weights(batch: &ReturnBatch, alpha: f64) -> Result<GibbsWeights> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::invalid(format!("alpha must be finite and non-negative, got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(GibbsWeights::uniform(batch.len()));
    }
    let m = batch.max();
    let mut weights: Vec<f64> = batch.returns().iter().map(|r| (alpha * (r - m)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let ess = ess_normalized(&weights);
    Ok(GibbsWeights { weights, alpha, ess })
}

fn ess_normalized(weights: &[f64]) -> f64 {
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    let n = weights.len() as f64;
    (1.0 / sq).clamp(1.0, n)
}

/// `(Σ w)² / Σ w²`.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::invalid("no weights"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("weights must be finite and non-negative"));
    }
    let sum: f64 = weights.iter().sum();
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    if sum == 0.0 {
        return Err(Error::invalid("all weights are zero"));
    }
    Ok(sum * sum / sq)
}

/// `log Σ exp(α Rₙ)` evaluated stably.
fn log_sum_exp(alpha: f64, returns: &[f64]) -> f64 {
    let m = returns.iter().map(|r| alpha * r).fold(f64::NEG_INFINITY, f64::max);
    m + returns.iter().map(|r| (alpha * r - m).exp()).sum::<f64>().ln()
}

/// Empirical dual of episodic REPS, `ε/α + (1/α) log((1/N) Σ exp(α Rₙ))`.
pub fn reps_dual(alpha: f64, batch: &ReturnBatch, epsilon: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("REPS dual needs alpha > 0, got {alpha}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain("REPS bound epsilon must be positive"));
    }
    let n = batch.len() as f64;
    Ok((epsilon + log_sum_exp(alpha, batch.returns()) - n.ln()) / alpha)
}

/// Importance-sampled lower bound on the posterior expected return,
/// `Σ wₙ Rₙ − ‖R‖∞ √((1−δ)/δ) / √N̂_α`.
pub fn lbps_lower_bound(alpha: f64, batch: &ReturnBatch, delta: f64) -> Result<f64> {
    lbps_lower_bound_with(alpha, batch, delta, batch.r_inf())
}

pub(crate) fn lbps_lower_bound_with(
    alpha: f64,
    batch: &ReturnBatch,
    delta: f64,
    r_inf: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let w = compute_weights(batch, alpha)?;
    let penalty = r_inf * ((1.0 - delta) / delta).sqrt() / w.ess.sqrt();
    Ok(w.expectation(batch.returns()) - penalty)
}

//! Inverse temperature selection.
//!
//! Every strategy maps a [`ReturnBatch`] to Gibbs weights. The adaptive ones
//! search `log α` over [`ALPHA_MIN`, `ALPHA_MAX`]; a batch whose returns are all
//! equal yields `α = 0` and a `degenerate` flag.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::scalar::minimize_scalar_full;
use crate::weights::{compute_weights, lbps_lower_bound_with, reps_dual, GibbsWeights, ReturnBatch};
use crate::{Error, Result};

pub const ALPHA_MIN: f64 = 1e-6;
pub const ALPHA_MAX: f64 = 1e6;
/// Abscissa tolerance of the `log α` searches.
pub const LOG_ALPHA_TOL: f64 = 1e-9;

/// How `‖R‖∞` is estimated when the batch does not carry an explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReturnBound {
    /// `max R − min R`.
    #[default]
    Range,
    /// `max |R|` over the raw returns, floored at the range.
    SupNorm,
}

impl ReturnBound {
    pub fn resolve(self, batch: &ReturnBatch) -> f64 {
        if let Some(r) = batch.explicit_r_inf() {
            return r;
        }
        match self {
            ReturnBound::Range => batch.range(),
            ReturnBound::SupNorm => {
                let sup = batch.returns().iter().fold(0.0f64, |m, r| m.max(r.abs()));
                sup.max(batch.range())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemperatureStrategy {
    /// Fixed `α` (MPPI, AICO).
    Constant { alpha: f64 },
    /// `ᾱ / (max R − min R)` (PI², PoWER).
    Pi2 { alpha_bar: f64 },
    /// Expectation-maximization fixed point (RWR, I2C).
    EmRwr { alpha_init: f64, n_fixed_point_iters: usize },
    /// Hard KL bound via the empirical dual (REPS).
    RepsKl { epsilon: f64 },
    /// Maximize the importance-sampled lower bound on the expected return.
    Lbps { delta: f64, bound: ReturnBound },
    /// Match a target effective sample size.
    Essps { n_star: f64 },
    /// Uniform weights on the `k` best samples (CEM).
    CemElite { k: usize },
}

impl TemperatureStrategy {
    pub fn validate(&self, n: usize) -> Result<()> {
        let ok = match *self {
            Self::Constant { alpha } => alpha.is_finite() && alpha >= 0.0,
            Self::Pi2 { alpha_bar } => alpha_bar.is_finite() && alpha_bar > 0.0,
            Self::EmRwr { alpha_init, .. } => alpha_init.is_finite() && alpha_init >= 0.0,
            Self::RepsKl { epsilon } => epsilon.is_finite() && epsilon > 0.0,
            Self::Lbps { delta, .. } => delta > 0.0 && delta < 1.0,
            Self::Essps { n_star } => n_star >= 1.0 && n_star <= n as f64,
            Self::CemElite { k } => k >= 1 && k <= n,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid strategy parameters {self:?} for N = {n}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Pi2 { .. } => "pi2",
            Self::EmRwr { .. } => "em",
            Self::RepsKl { .. } => "reps",
            Self::Lbps { .. } => "lbps",
            Self::Essps { .. } => "essps",
            Self::CemElite { .. } => "cem",
        }
    }
}

/// Outcome of temperature selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub weights: GibbsWeights,
    /// All returns were equal; `α` fell back to 0.
    pub degenerate: bool,
    /// For ESSPS: whether `|N̂ − N*| ≤ 1` was reached inside the bracket.
    pub attained: bool,
}

impl Selection {
    pub fn alpha(&self) -> f64 {
        self.weights.alpha
    }

    pub fn ess(&self) -> f64 {
        self.weights.ess
    }

    fn at(batch: &ReturnBatch, alpha: f64) -> Result<Self> {
        Ok(Self { weights: compute_weights(batch, alpha)?, degenerate: false, attained: true })
    }
}

pub fn select_alpha(strategy: &TemperatureStrategy, batch: &ReturnBatch) -> Result<Selection> {
    strategy.validate(batch.len())?;
    match *strategy {
        TemperatureStrategy::Constant { alpha } => {
            let mut s = Selection::at(batch, alpha)?;
            s.degenerate = batch.is_degenerate();
            Ok(s)
        }
        TemperatureStrategy::CemElite { k } => {
            let mut s = cem_elite(batch, k);
            s.degenerate = batch.is_degenerate();
            Ok(s)
        }
        _ if batch.is_degenerate() => Ok(Selection {
            weights: GibbsWeights::uniform(batch.len()),
            degenerate: true,
            attained: true,
        }),
        TemperatureStrategy::Pi2 { alpha_bar } => Selection::at(batch, alpha_bar / batch.range()),
        TemperatureStrategy::EmRwr { alpha_init, n_fixed_point_iters } => {
            let alpha = em_fixed_point(batch, alpha_init, n_fixed_point_iters)?;
            Selection::at(batch, alpha)
        }
        TemperatureStrategy::RepsKl { epsilon } => {
            let shifted = batch.shifted();
            let log_alpha = search(|la| {
                reps_dual(la.exp(), &shifted, epsilon).unwrap_or(f64::NAN)
            })?
            .0;
            Selection::at(batch, log_alpha.exp())
        }
        TemperatureStrategy::Lbps { delta, bound } => {
            let r_inf = bound.resolve(batch);
            let shifted = batch.shifted();
            let objective =
                |alpha: f64| lbps_lower_bound_with(alpha, &shifted, delta, r_inf).unwrap_or(f64::NAN);
            let (log_alpha, neg_best) = search(|la| -objective(la.exp()))?;
            // α = 0 sits outside the log bracket but is a valid maximizer.
            let alpha = if objective(0.0) >= -neg_best { 0.0 } else { log_alpha.exp() };
            Selection::at(batch, alpha)
        }
        TemperatureStrategy::Essps { n_star } => {
            let gap = |alpha: f64| match compute_weights(batch, alpha) {
                Ok(w) => (w.ess - n_star).abs(),
                Err(_) => f64::NAN,
            };
            let (log_alpha, best) = search(|la| gap(la.exp()))?;
            let alpha = if gap(0.0) <= best { 0.0 } else { log_alpha.exp() };
            let mut s = Selection::at(batch, alpha)?;
            s.attained = (s.weights.ess - n_star).abs() <= 1.0;
            Ok(s)
        }
    }
}

fn search<F: FnMut(f64) -> f64>(f: F) -> Result<(f64, f64)> {
    let m = minimize_scalar_full(f, ALPHA_MIN.ln(), ALPHA_MAX.ln(), LOG_ALPHA_TOL)?;
    Ok((m.x, m.value))
}

/// `α ← Σ exp(α R̃) / Σ ℓ exp(α R̃)` with `R̃ = R − max R` and losses `ℓ = −R̃ ≥ 0`.
fn em_fixed_point(batch: &ReturnBatch, alpha_init: f64, iters: usize) -> Result<f64> {
    let losses: Vec<f64> = {
        let m = batch.max();
        batch.returns().iter().map(|r| m - r).collect()
    };
    let mut alpha = alpha_init;
    for _ in 0..iters {
        let w = compute_weights(batch, alpha)?;
        let expected_loss = w.expectation(&losses);
        if !(expected_loss > 0.0) {
            return Err(Error::domain(format!(
                "EM temperature update divides by Σ R exp(αR) = 0 at alpha = {alpha}"
            )));
        }
        alpha = 1.0 / expected_loss;
    }
    Ok(alpha)
}

fn cem_elite(batch: &ReturnBatch, k: usize) -> Selection {
    let r = batch.returns();
    let mut order: Vec<usize> = (0..r.len()).collect();
    // stable: equal returns keep index order
    order.sort_by(|&a, &b| r[b].partial_cmp(&r[a]).unwrap_or(core::cmp::Ordering::Equal));
    let mut weights = alloc::vec![0.0; r.len()];
    for &i in &order[..k] {
        weights[i] = 1.0 / k as f64;
    }
    Selection {
        weights: GibbsWeights { weights, alpha: f64::INFINITY, ess: k as f64 },
        degenerate: false,
        attained: true,
    }
}

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::eval::{Evaluator, Objective};
use super::policy::{m_projection, Policy};
use crate::metrics::fft_smoothness;
use crate::temperature::{select_alpha, Selection, TemperatureStrategy};
use crate::weights::ReturnBatch;
use crate::{Error, Result};

/// Allowed drop of the temporal log-determinant below the prior's before an
/// iteration is flagged as collapsed.
pub const COLLAPSE_MARGIN: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicConfig {
    pub n_iter: usize,
    pub n_samples: usize,
    pub strategy: TemperatureStrategy,
    pub seed: u64,
    /// Per-dimension actuator limits applied before fitting.
    pub limits: Option<Vec<(f64, f64)>>,
}

impl EpisodicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.n_samples < 2 {
            return Err(Error::invalid(format!(
                "need n_iter ≥ 1 and n_samples ≥ 2 (got {} and {})",
                self.n_iter, self.n_samples
            )));
        }
        self.strategy.validate(self.n_samples)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub alpha: f64,
    pub ess: f64,
    pub return_min: f64,
    pub return_median: f64,
    pub return_max: f64,
    /// Entropy proxy of the updated policy.
    pub entropy: f64,
    pub degenerate: bool,
    pub low_ess: bool,
    /// Temporal log-determinant fell more than [`COLLAPSE_MARGIN`] below the prior's.
    pub collapsed: bool,
    pub attained: bool,
    /// Smoothness of the updated mean action sequence; NaN for horizons under 4.
    pub smoothness: f64,
    /// Filled in by callers that measure time; zero otherwise.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn mean_ess(&self) -> f64 {
        self.records.iter().map(|r| r.ess).sum::<f64>() / self.records.len().max(1) as f64
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean_smoothness(policy: &Policy) -> Result<f64> {
    let grid = policy.grid();
    if grid.len < 4 {
        return Ok(f64::NAN);
    }
    Ok(fft_smoothness(&policy.mean_actions()?, 1.0 / grid.dt)?.score)
}

/// Outcome of one sample–weight–project round.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub policy: Policy,
    pub record: IterationRecord,
    pub selection: Selection,
    pub returns: Vec<f64>,
}

/// One policy iteration: sample `n_samples` parameters, evaluate their action
/// sequences, pick `α` and refit the policy.
#[allow(clippy::too_many_arguments)]
pub fn ppi_iteration<O, E>(
    policy: &Policy,
    objective: &O,
    evaluator: &E,
    n_samples: usize,
    strategy: &TemperatureStrategy,
    limits: Option<&[(f64, f64)]>,
    prior_log_det: f64,
    iter: usize,
    rng: &mut ChaCha8Rng,
) -> Result<IterationOutcome>
where
    O: Objective + Sync + ?Sized,
    E: Evaluator + ?Sized,
{
    let params = policy.sample_parameters(n_samples, rng)?;
    let actions = policy.actions(&params)?;
    let mut returns = Vec::with_capacity(n_samples);
    for (index, r) in evaluator.evaluate(objective, &actions).into_iter().enumerate() {
        match r {
            Ok(v) if v.is_finite() => returns.push(v),
            Ok(v) => return Err(Error::Evaluation { index, message: format!("non-finite return {v}") }),
            Err(e) => return Err(Error::Evaluation { index, message: e.to_string() }),
        }
    }
    let batch = ReturnBatch::new(returns.clone())?;
    let selection = select_alpha(strategy, &batch)?;
    let projection = m_projection(policy, &params, &selection.weights.weights, limits)?;
    let log_det = projection.policy.temporal_log_det()?;
    let record = IterationRecord {
        iter,
        alpha: selection.alpha(),
        ess: selection.ess(),
        return_min: batch.min(),
        return_median: median(&returns),
        return_max: batch.max(),
        entropy: projection.policy.entropy_proxy()?,
        degenerate: selection.degenerate,
        low_ess: projection.low_ess,
        collapsed: !log_det.is_finite() || log_det < prior_log_det - COLLAPSE_MARGIN,
        attained: selection.attained,
        smoothness: mean_smoothness(&projection.policy)?,
        wall_ms: 0.0,
    };
    Ok(IterationOutcome { policy: projection.policy, record, selection, returns })
}

pub fn run_episodic<O, E>(
    objective: &O,
    initial: Policy,
    config: &EpisodicConfig,
    evaluator: &E,
) -> Result<(Policy, IterationTrace)>
where
    O: Objective + Sync + ?Sized,
    E: Evaluator + ?Sized,
{
    run_episodic_with(objective, initial, config, evaluator, |_, _| {})
}

/// [`run_episodic`] with a hook called after every iteration with the record
/// and the updated policy.
pub fn run_episodic_with<O, E, F>(
    objective: &O,
    initial: Policy,
    config: &EpisodicConfig,
    evaluator: &E,
    mut observe: F,
) -> Result<(Policy, IterationTrace)>
where
    O: Objective + Sync + ?Sized,
    E: Evaluator + ?Sized,
    F: FnMut(&mut IterationRecord, &Policy),
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let prior_log_det = initial.temporal_log_det()?;
    let mut policy = initial;
    let mut trace = IterationTrace::default();
    for iter in 0..config.n_iter {
        let mut out = ppi_iteration(
            &policy,
            objective,
            evaluator,
            config.n_samples,
            &config.strategy,
            config.limits.as_deref(),
            prior_log_det,
            iter,
            &mut rng,
        )?;
        observe(&mut out.record, &out.policy);
        trace.records.push(out.record);
        policy = out.policy;
    }
    Ok((policy, trace))
}

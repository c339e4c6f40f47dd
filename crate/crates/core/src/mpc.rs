//! Receding-horizon posterior policy iteration.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envs::{rollout_return, ControlTask};
use crate::ppi::{ppi_iteration, Evaluator, IterationRecord, Policy};
use crate::priors::{MatrixNormalPolicy, ShiftOperator, TimeGrid};
use crate::temperature::TemperatureStrategy;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcConfig {
    pub horizon: usize,
    pub n_iters_per_step: usize,
    pub n_warmstart_iters: usize,
    pub n_samples: usize,
    pub gamma: f64,
    pub strategy: TemperatureStrategy,
    pub seed: u64,
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 || self.n_samples < 2 || !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!(
                "need horizon ≥ 2, n_samples ≥ 2 and gamma in [0, 1] (got {}, {}, {})",
                self.horizon, self.n_samples, self.gamma
            )));
        }
        self.strategy.validate(self.n_samples)
    }
}

#[derive(Debug, Clone)]
pub struct ControllerState {
    /// Policy over the window starting at `step·dt`.
    pub policy: Policy,
    pub step: usize,
    pub last_action: Option<DVector<f64>>,
    pub cumulative_return: f64,
    pub env_state: DVector<f64>,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub iterations: Vec<IterationRecord>,
    pub action: DVector<f64>,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub total_return: f64,
    /// Executed actions, one row per step.
    pub actions: DMatrix<f64>,
    pub warm_start: Vec<IterationRecord>,
    pub steps: Vec<StepRecord>,
    /// Step at which the environment failed, with the error.
    pub failure: Option<(usize, Error)>,
}

impl EpisodeLog {
    pub fn ess_per_iteration(&self) -> Vec<f64> {
        self.steps.iter().flat_map(|s| s.iterations.iter().map(|r| r.ess)).collect()
    }
}

/// Planner over a simulator `model` with a fixed prior.
pub struct MpcEngine {
    pub config: MpcConfig,
    pub model: ControlTask,
    pub prior: Policy,
    limits: Vec<(f64, f64)>,
    shift: Option<ShiftOperator>,
    prior_log_det: f64,
}

impl MpcEngine {
    pub fn new(config: MpcConfig, model: ControlTask, prior: Policy) -> Result<Self> {
        config.validate()?;
        model.validate()?;
        let grid = grid_of(&prior);
        if grid.len != config.horizon || (grid.dt - model.dt()).abs() > 1e-12 || grid.start != 0.0 {
            return Err(Error::invalid("prior grid must start at 0 with the task dt and horizon length"));
        }
        if prior.action_dim() != model.action_dim() {
            return Err(Error::invalid("prior and task action dimensions differ"));
        }
        let shift = match &prior {
            Policy::MatrixNormal(p) => Some(ShiftOperator::new(&p.grid, &p.grid.advanced(1), p.kernel)?),
            Policy::Features(_) => None,
        };
        let prior_log_det = prior.temporal_log_det()?;
        Ok(Self { config, model, limits: model.limits(), prior, shift, prior_log_det })
    }

    fn iterate<E, F>(
        &self,
        policy: &Policy,
        env_state: &DVector<f64>,
        rng: &mut ChaCha8Rng,
        count: usize,
        evaluator: &E,
        observe: &mut F,
        step: Option<usize>,
    ) -> Result<(Policy, Vec<IterationRecord>)>
    where
        E: Evaluator + ?Sized,
        F: FnMut(&mut IterationRecord, Option<usize>),
    {
        let model = self.model;
        let objective = move |a: &DMatrix<f64>| rollout_return(&model, a, env_state).map(|r| r.total);
        let mut policy = policy.clone();
        let mut records = Vec::with_capacity(count);
        for iter in 0..count {
            let mut out = ppi_iteration(
                &policy,
                &objective,
                evaluator,
                self.config.n_samples,
                &self.config.strategy,
                Some(&self.limits),
                self.prior_log_det,
                iter,
                rng,
            )?;
            observe(&mut out.record, step);
            records.push(out.record);
            policy = out.policy;
        }
        Ok((policy, records))
    }

    /// Episodic iterations at `t = 0` before the first action.
    pub fn warm_start<E, F>(&self, evaluator: &E, mut observe: F) -> Result<(ControllerState, Vec<IterationRecord>)>
    where
        E: Evaluator + ?Sized,
        F: FnMut(&mut IterationRecord, Option<usize>),
    {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let env_state = self.model.initial_state();
        let (policy, records) =
            self.iterate(&self.prior, &env_state, &mut rng, self.config.n_warmstart_iters, evaluator, &mut observe, None)?;
        let state =
            ControllerState { policy, step: 0, last_action: None, cumulative_return: 0.0, env_state, rng };
        Ok((state, records))
    }

    /// Replan over the current window, execute the first mean action on `env`
    /// and shift the policy one step forward.
    pub fn plan_step<E, F>(
        &self,
        state: ControllerState,
        env: &ControlTask,
        evaluator: &E,
        mut observe: F,
    ) -> Result<(DVector<f64>, ControllerState, StepRecord)>
    where
        E: Evaluator + ?Sized,
        F: FnMut(&mut IterationRecord, Option<usize>),
    {
        let ControllerState { policy, step, cumulative_return, env_state, mut rng, .. } = state;
        let (policy, iterations) = self.iterate(
            &policy,
            &env_state,
            &mut rng,
            self.config.n_iters_per_step,
            evaluator,
            &mut observe,
            Some(step),
        )?;
        let mean = policy.mean_actions()?;
        let action = DVector::from_iterator(
            mean.ncols(),
            mean.row(0).iter().zip(&self.limits).map(|(v, (lo, hi))| v.clamp(*lo, *hi)),
        );
        let reward = env.reward(&env_state, action.as_slice());
        let next_state = env.step(&env_state, action.as_slice());
        if !reward.is_finite() || next_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        let policy = self.shift(&policy, step + 1)?;
        let record = StepRecord { step, iterations, action: action.clone(), reward };
        let state = ControllerState {
            policy,
            step: step + 1,
            last_action: Some(action.clone()),
            cumulative_return: cumulative_return + reward,
            env_state: next_state,
            rng,
        };
        Ok((action, state, record))
    }

    /// Move `policy` to the window starting at `next_step·dt`.
    pub fn shift(&self, policy: &Policy, next_step: usize) -> Result<Policy> {
        let grid = TimeGrid { start: next_step as f64 * self.model.dt(), ..grid_of(policy) };
        match (policy, &self.shift, &self.prior) {
            (Policy::MatrixNormal(p), Some(op), Policy::MatrixNormal(prior)) => {
                let prior_mean = prior.prior_mean();
                let s = op.apply(&prior_mean, &prior_mean, &p.mean, &p.k, self.config.gamma)?;
                Ok(Policy::MatrixNormal(MatrixNormalPolicy { mean: s.mean, k: s.k, grid, ..p.clone() }))
            }
            (Policy::Features(p), _, _) => Ok(Policy::Features(p.shifted(grid))),
            _ => Err(Error::invalid("policy kind does not match the prior")),
        }
    }
}

fn grid_of(policy: &Policy) -> TimeGrid {
    policy.grid()
}

/// Run `env.steps()` control steps; `model` is used for planning rollouts.
pub fn run_mpc_episode<E>(env: &ControlTask, model: &ControlTask, prior: Policy, config: &MpcConfig, evaluator: &E) -> Result<EpisodeLog>
where
    E: Evaluator + ?Sized,
{
    run_mpc_episode_with(env, model, prior, config, evaluator, |_, _| {})
}

/// [`run_mpc_episode`] with a hook on every iteration record (`None` during warm start).
pub fn run_mpc_episode_with<E, F>(
    env: &ControlTask,
    model: &ControlTask,
    prior: Policy,
    config: &MpcConfig,
    evaluator: &E,
    mut observe: F,
) -> Result<EpisodeLog>
where
    E: Evaluator + ?Sized,
    F: FnMut(&mut IterationRecord, Option<usize>),
{
    env.validate()?;
    if env.action_dim() != model.action_dim() || (env.dt() - model.dt()).abs() > 1e-12 {
        return Err(Error::invalid("environment and model disagree on action dimension or dt"));
    }
    let engine = MpcEngine::new(*config, *model, prior)?;
    let (mut state, warm_start) = engine.warm_start(evaluator, &mut observe)?;
    let t = env.steps();
    let mut actions = DMatrix::zeros(t, env.action_dim());
    let mut steps = Vec::with_capacity(t);
    let mut failure = None;
    for k in 0..t {
        match engine.plan_step(state.clone(), env, evaluator, &mut observe) {
            Ok((a, next, record)) => {
                actions.set_row(k, &a.transpose());
                steps.push(record);
                state = next;
            }
            Err(e) => {
                failure = Some((k, e));
                actions = actions.rows(0, k).into_owned();
                break;
            }
        }
    }
    Ok(EpisodeLog { total_return: state.cumulative_return, actions, warm_start, steps, failure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppi::Sequential;
    use crate::priors::Kernel;

    fn engine(iters: usize, warm: usize, gamma: f64) -> MpcEngine {
        let task = ControlTask::pendulum();
        let grid = TimeGrid::new(0.0, task.dt(), 10).unwrap();
        let prior = MatrixNormalPolicy::from_actuator_limits(grid, Kernel::se(0.05, 1.0), &task.limits()).unwrap();
        let cfg = MpcConfig {
            horizon: 10,
            n_iters_per_step: iters,
            n_warmstart_iters: warm,
            n_samples: 16,
            gamma,
            strategy: TemperatureStrategy::Essps { n_star: 4.0 },
            seed: 1,
        };
        MpcEngine::new(cfg, task, Policy::MatrixNormal(prior)).unwrap()
    }

    #[test]
    fn no_iterations_execute_prior_mean() {
        let e = engine(0, 0, 1.0);
        let (state, recs) = e.warm_start(&Sequential, |_, _| {}).unwrap();
        assert!(recs.is_empty());
        assert_eq!(state.policy, e.prior);
        let (a, next, _) = e.plan_step(state, &ControlTask::pendulum(), &Sequential, |_, _| {}).unwrap();
        assert_eq!(a[0], 0.0);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn window_alignment() {
        let e = engine(1, 1, 1.0);
        let (mut s, _) = e.warm_start(&Sequential, |_, _| {}).unwrap();
        for k in 1..=7 {
            s = e.plan_step(s, &ControlTask::pendulum(), &Sequential, |_, _| {}).unwrap().1;
            let Policy::MatrixNormal(p) = &s.policy else { unreachable!() };
            assert!((p.grid.start - k as f64 * 0.02).abs() < 1e-12);
        }
    }
}

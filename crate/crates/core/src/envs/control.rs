use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Integration substeps per control step for the pendulum.
pub const PENDULUM_SUBSTEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlTask {
    /// State `[θ, θ̇]` with `θ = 0` hanging down; reward is highest upright at rest.
    PendulumSwingUp { m: f64, l_p: f64, g: f64, torque_limit: f64, dt: f64, steps: usize },
    /// State `[px, py, vx, vy]`, force applied per axis.
    PointMass2D { mass: f64, force_limit: f64, target: [f64; 2], dt: f64, steps: usize },
}

/// Return and visited states of one rollout; `states[0]` is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub total: f64,
    pub rewards: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl ControlTask {
    pub fn pendulum() -> Self {
        ControlTask::PendulumSwingUp { m: 1.0, l_p: 1.0, g: 9.81, torque_limit: 15.0, dt: 0.02, steps: 250 }
    }

    pub fn point_mass() -> Self {
        ControlTask::PointMass2D { mass: 1.0, force_limit: 2.0, target: [1.0, 0.5], dt: 0.02, steps: 250 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ControlTask::PendulumSwingUp { m, l_p, g, torque_limit, dt, steps } => {
                m > 0.0 && l_p > 0.0 && g >= 0.0 && torque_limit > 0.0 && dt > 0.0 && steps > 0
            }
            ControlTask::PointMass2D { mass, force_limit, target, dt, steps } => {
                mass > 0.0 && force_limit > 0.0 && target.iter().all(|t| t.is_finite()) && dt > 0.0 && steps > 0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid task parameters {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ControlTask::PendulumSwingUp { .. } => "pendulum",
            ControlTask::PointMass2D { .. } => "point_mass",
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            ControlTask::PendulumSwingUp { .. } => 1,
            ControlTask::PointMass2D { .. } => 2,
        }
    }

    pub fn dt(&self) -> f64 {
        match *self {
            ControlTask::PendulumSwingUp { dt, .. } | ControlTask::PointMass2D { dt, .. } => dt,
        }
    }

    /// Episode length `T`.
    pub fn steps(&self) -> usize {
        match *self {
            ControlTask::PendulumSwingUp { steps, .. } | ControlTask::PointMass2D { steps, .. } => steps,
        }
    }

    pub fn limits(&self) -> Vec<(f64, f64)> {
        match *self {
            ControlTask::PendulumSwingUp { torque_limit, .. } => vec![(-torque_limit, torque_limit)],
            ControlTask::PointMass2D { force_limit, .. } => vec![(-force_limit, force_limit); 2],
        }
    }

    pub fn initial_state(&self) -> DVector<f64> {
        match self {
            ControlTask::PendulumSwingUp { .. } => DVector::zeros(2),
            ControlTask::PointMass2D { .. } => DVector::zeros(4),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.initial_state().len()
    }

    /// Reward of taking (already clipped) action `u` in state `s`.
    pub fn reward(&self, s: &DVector<f64>, u: &[f64]) -> f64 {
        match *self {
            ControlTask::PendulumSwingUp { .. } => {
                let theta = s[0].rem_euclid(2.0 * PI);
                -(theta - PI).powi(2) - 0.1 * s[1] * s[1] - 0.001 * u[0] * u[0]
            }
            ControlTask::PointMass2D { target, .. } => {
                let dx = s[0] - target[0];
                let dy = s[1] - target[1];
                -(dx * dx + dy * dy) - 0.001 * (u[0] * u[0] + u[1] * u[1])
            }
        }
    }

    /// Next state under clipped action `u`.
    pub fn step(&self, s: &DVector<f64>, u: &[f64]) -> DVector<f64> {
        match *self {
            ControlTask::PendulumSwingUp { m, l_p, g, dt, .. } => {
                let h = dt / PENDULUM_SUBSTEPS as f64;
                let inertia = m * l_p * l_p;
                let acc = |theta: f64| (u[0] - m * g * l_p * theta.sin()) / inertia;
                let (mut theta, mut omega) = (s[0], s[1]);
                // kick-drift-kick
                for _ in 0..PENDULUM_SUBSTEPS {
                    omega += 0.5 * h * acc(theta);
                    theta += h * omega;
                    omega += 0.5 * h * acc(theta);
                }
                DVector::from_vec(vec![theta, omega])
            }
            ControlTask::PointMass2D { mass, dt, .. } => {
                let mut next = s.clone();
                for k in 0..2 {
                    let a = u[k] / mass;
                    next[k] = s[k] + s[k + 2] * dt + 0.5 * a * dt * dt;
                    next[k + 2] = s[k + 2] + a * dt;
                }
                next
            }
        }
    }

    /// Mechanical energy of the pendulum, `None` for other tasks.
    pub fn pendulum_energy(&self, s: &DVector<f64>) -> Option<f64> {
        match *self {
            ControlTask::PendulumSwingUp { m, l_p, g, .. } => {
                Some(0.5 * m * l_p * l_p * s[1] * s[1] - m * g * l_p * s[0].cos())
            }
            _ => None,
        }
    }

    fn clip(&self, u: &mut [f64]) {
        for (v, (lo, hi)) in u.iter_mut().zip(self.limits()) {
            *v = v.clamp(lo, hi);
        }
    }
}

/// Integrate `actions` (`len×d_a`, clipped to the limits) from `initial`,
/// summing `r(sₜ, aₜ)`.
pub fn rollout_return(task: &ControlTask, actions: &DMatrix<f64>, initial: &DVector<f64>) -> Result<Rollout> {
    if actions.ncols() != task.action_dim() || initial.len() != task.state_dim() {
        return Err(Error::invalid(format!(
            "{} expects {} action dims and {} state dims",
            task.name(),
            task.action_dim(),
            task.state_dim()
        )));
    }
    if actions.nrows() > task.steps() {
        return Err(Error::invalid(format!("{} actions exceed the episode length {}", actions.nrows(), task.steps())));
    }
    let mut s = initial.clone();
    let mut states = Vec::with_capacity(actions.nrows() + 1);
    let mut rewards = Vec::with_capacity(actions.nrows());
    states.push(s.clone());
    let mut u = vec![0.0; task.action_dim()];
    for t in 0..actions.nrows() {
        for (j, v) in u.iter_mut().enumerate() {
            *v = actions[(t, j)];
        }
        task.clip(&mut u);
        let r = task.reward(&s, &u);
        s = task.step(&s, &u);
        if !r.is_finite() || s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: t });
        }
        rewards.push(r);
        states.push(s.clone());
    }
    Ok(Rollout { total: rewards.iter().sum(), rewards, states })
}

/// Sequential batch evaluation; errors are reported per index.
pub fn batch_rollouts(task: &ControlTask, sequences: &[DMatrix<f64>], initial: &DVector<f64>) -> Vec<Result<f64>> {
    sequences.iter().map(|a| rollout_return(task, a, initial).map(|r| r.total)).collect()
}

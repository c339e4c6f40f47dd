//! Desk-scale objectives and dynamics.

pub mod bbo;
pub mod control;

pub use bbo::{bbo_evaluate, BboFunction, BboKind};
pub use control::{batch_rollouts, rollout_return, ControlTask, Rollout};

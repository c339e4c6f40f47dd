use mcppi_core::envs::{rollout_return, ControlTask};
use mcppi_core::ppi::{Evaluator, Objective};
use mcppi_core::{DMatrix, DVector, Result};
use rayon::prelude::*;

/// Evaluates a batch on the rayon pool; output order matches input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl Evaluator for Parallel {
    fn evaluate<O: Objective + Sync + ?Sized>(&self, objective: &O, batch: &[DMatrix<f64>]) -> Vec<Result<f64>> {
        batch.par_iter().map(|a| objective.evaluate(a)).collect()
    }
}

/// Concurrent counterpart of `mcppi_core::envs::batch_rollouts`.
pub fn par_batch_rollouts(task: &ControlTask, sequences: &[DMatrix<f64>], initial: &DVector<f64>) -> Vec<Result<f64>> {
    sequences.par_iter().map(|a| rollout_return(task, a, initial).map(|r| r.total)).collect()
}

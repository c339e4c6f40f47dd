use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::Result;

/// Maps an action sequence (or BBO parameter matrix) to a return.
pub trait Objective {
    fn evaluate(&self, actions: &DMatrix<f64>) -> Result<f64>;
}

impl<F> Objective for F
where
    F: Fn(&DMatrix<f64>) -> Result<f64>,
{
    fn evaluate(&self, actions: &DMatrix<f64>) -> Result<f64> {
        self(actions)
    }
}

/// Evaluates a batch, preserving order. Implementations may run concurrently
/// but must return exactly what sequential evaluation would.
pub trait Evaluator {
    fn evaluate<O: Objective + Sync + ?Sized>(&self, objective: &O, batch: &[DMatrix<f64>]) -> Vec<Result<f64>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Evaluator for Sequential {
    fn evaluate<O: Objective + Sync + ?Sized>(&self, objective: &O, batch: &[DMatrix<f64>]) -> Vec<Result<f64>> {
        batch.iter().map(|a| objective.evaluate(a)).collect()
    }
}

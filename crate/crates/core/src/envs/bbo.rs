use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BboKind {
    Sphere,
    Rosenbrock,
    Rastrigin,
    StyblinskiTang,
}

/// Styblinski–Tang minimizer coordinate.
const ST_ARGMIN: f64 = -2.903_534_027_771_177_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BboFunction {
    pub kind: BboKind,
    pub dimension: usize,
}

impl BboFunction {
    pub fn new(kind: BboKind, dimension: usize) -> Result<Self> {
        if dimension == 0 || (kind == BboKind::Rosenbrock && dimension < 2) {
            return Err(Error::invalid(format!("{kind:?} needs a larger dimension than {dimension}")));
        }
        Ok(Self { kind, dimension })
    }

    pub fn sphere(dimension: usize) -> Self {
        Self { kind: BboKind::Sphere, dimension }
    }

    /// Loss `f(x)`; lower is better.
    pub fn loss(&self, x: &[f64]) -> f64 {
        match self.kind {
            BboKind::Sphere => x.iter().map(|v| v * v).sum(),
            BboKind::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            BboKind::Rastrigin => {
                10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
            }
            BboKind::StyblinskiTang => 0.5 * x.iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>(),
        }
    }

    pub fn optimum(&self) -> Vec<f64> {
        let v = match self.kind {
            BboKind::Sphere | BboKind::Rastrigin => 0.0,
            BboKind::Rosenbrock => 1.0,
            BboKind::StyblinskiTang => ST_ARGMIN,
        };
        vec![v; self.dimension]
    }

    pub fn optimal_value(&self) -> f64 {
        match self.kind {
            BboKind::StyblinskiTang => self.loss(&self.optimum()),
            _ => 0.0,
        }
    }

    /// Return `−f(x)` for a parameter matrix read in column-major order.
    pub fn evaluate(&self, x: &DMatrix<f64>) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::invalid(format!("expected {} parameters, got {}", self.dimension, x.len())));
        }
        Ok(-self.loss(x.as_slice()))
    }
}

pub fn bbo_evaluate(function: &BboFunction, batch: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    batch.iter().map(|x| function.evaluate(x)).collect()
}

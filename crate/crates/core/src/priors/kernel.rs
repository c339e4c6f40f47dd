use alloc::format;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{factor_psd, PsdFactor};
use crate::{Error, Result};

/// Relative jitter added to Gram diagonals, in units of the kernel variance.
pub const RELATIVE_JITTER: f64 = 1e-8;

/// Uniform time grid `start + i·dt`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, dt: f64, len: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !start.is_finite() {
            return Err(Error::invalid(format!("bad grid start {start} / dt {dt}")));
        }
        if len == 0 {
            return Err(Error::invalid("grid needs at least one point"));
        }
        Ok(Self { start, dt, len })
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.dt
    }

    pub fn times(&self) -> alloc::vec::Vec<f64> {
        (0..self.len).map(|i| self.time(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.time(self.len - 1)
    }

    /// The same grid advanced by `steps` points.
    pub fn advanced(&self, steps: usize) -> Self {
        Self { start: self.start + steps as f64 * self.dt, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    SquaredExponential { lengthscale: f64, variance: f64 },
    White { variance: f64 },
}

impl Kernel {
    pub fn se(lengthscale: f64, variance: f64) -> Self {
        Kernel::SquaredExponential { lengthscale, variance }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::SquaredExponential { lengthscale, variance } => {
                lengthscale > 0.0 && lengthscale.is_finite() && variance > 0.0 && variance.is_finite()
            }
            Kernel::White { variance } => variance > 0.0 && variance.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid kernel {self:?}")))
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Kernel::SquaredExponential { variance, .. } | Kernel::White { variance } => variance,
        }
    }

    pub fn default_jitter(&self) -> f64 {
        RELATIVE_JITTER * self.variance()
    }

    /// Covariance at time lag `tau`. The white kernel treats `|tau| ≤ coincide` as zero lag.
    pub fn eval(&self, tau: f64, coincide: f64) -> f64 {
        match *self {
            Kernel::SquaredExponential { lengthscale, variance } => {
                variance * (-(tau * tau) / (2.0 * lengthscale * lengthscale)).exp()
            }
            Kernel::White { variance } => {
                if tau.abs() <= coincide {
                    variance
                } else {
                    0.0
                }
            }
        }
    }
}

fn coincide_tol(dt: f64) -> f64 {
    1e-9 * dt
}

/// Prior Gram matrix over `grid` with `jitter` on the diagonal.
///
/// Entries depend on integer lags only, so grids with the same `dt` and
/// `len` give bitwise-identical matrices.
pub fn kernel_gram(grid: &TimeGrid, kernel: &Kernel, jitter: f64) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    if !(jitter >= 0.0) {
        return Err(Error::invalid("jitter must be non-negative"));
    }
    let h = grid.len;
    let tol = coincide_tol(grid.dt);
    let by_lag: alloc::vec::Vec<f64> = (0..h).map(|k| kernel.eval(k as f64 * grid.dt, tol)).collect();
    let mut k = DMatrix::from_fn(h, h, |i, j| by_lag[i.abs_diff(j)]);
    for i in 0..h {
        k[(i, i)] += jitter;
    }
    Ok(k)
}

/// Gram matrix plus its Cholesky factor, failing with a diagnostic if the
/// jitter schedule cannot repair it.
pub fn factored_gram(grid: &TimeGrid, kernel: &Kernel, jitter: f64) -> Result<(DMatrix<f64>, PsdFactor)> {
    let k = kernel_gram(grid, kernel, jitter)?;
    let f = factor_psd(&k, jitter.max(kernel.default_jitter()))?;
    Ok((k, f))
}

/// Cross-covariance between the points of `rows` and `cols`.
///
/// Coincident times get the same `jitter` nugget as the diagonal of
/// [`kernel_gram`], keeping the joint covariance over both grids consistent.
pub fn kernel_cross(rows: &TimeGrid, cols: &TimeGrid, kernel: &Kernel, jitter: f64) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    if (rows.dt - cols.dt).abs() > 1e-12 {
        return Err(Error::invalid("cross-covariance needs grids with equal dt"));
    }
    let tol = coincide_tol(rows.dt);
    let offset = rows.start - cols.start;
    Ok(DMatrix::from_fn(rows.len, cols.len, |i, j| {
        let tau = offset + (i as f64 - j as f64) * rows.dt;
        let mut v = kernel.eval(tau, tol);
        if tau.abs() <= tol {
            v += jitter;
        }
        v
    }))
}

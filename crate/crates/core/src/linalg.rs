//! Dense helpers shared by the priors and the controller.

use alloc::format;
use nalgebra::{Cholesky, DMatrix, Dyn};
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Number of times the diagonal jitter is doubled before giving up.
pub const JITTER_DOUBLINGS: u32 = 3;

/// A Cholesky factor together with the extra diagonal jitter that was needed to obtain it.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    pub chol: Cholesky<f64, Dyn>,
    pub extra_jitter: f64,
}

impl PsdFactor {
    /// Lower triangular factor `L` with `L Lᵀ = A + extra_jitter·I`.
    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Cholesky factorization of a symmetric PSD matrix. On failure the jitter is
/// doubled (starting from `jitter`) up to [`JITTER_DOUBLINGS`] times.
pub fn factor_psd(m: &DMatrix<f64>, jitter: f64) -> Result<PsdFactor> {
    if !m.is_square() {
        return Err(Error::invalid("matrix to factorize is not square"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("matrix to factorize has non-finite entries"));
    }
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok(PsdFactor { chol, extra_jitter: 0.0 });
    }
    let n = m.nrows();
    let mut extra = jitter.max(f64::MIN_POSITIVE);
    for _ in 0..=JITTER_DOUBLINGS {
        let mut repaired = m.clone();
        for i in 0..n {
            repaired[(i, i)] += extra;
        }
        if let Some(chol) = Cholesky::new(repaired) {
            return Ok(PsdFactor { chol, extra_jitter: extra });
        }
        extra *= 2.0;
    }
    let eig = m.clone().symmetric_eigenvalues();
    let lo = eig.min();
    let hi = eig.max();
    Err(Error::numerical(format!(
        "Cholesky failed after jitter {:.3e}: eigenvalues in [{lo:.3e}, {hi:.3e}], condition estimate {:.3e}",
        extra / 2.0,
        hi.abs() / lo.abs().max(f64::MIN_POSITIVE)
    )))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec_cols(m: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

pub fn add_diagonal(m: &mut DMatrix<f64>, value: f64) {
    for i in 0..m.nrows().min(m.ncols()) {
        m[(i, i)] += value;
    }
}

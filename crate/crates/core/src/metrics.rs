//! FFT smoothness score of an action sequence.

use nalgebra::DMatrix;

use crate::spectral::fft_real;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessReport {
    pub score: f64,
    pub sampling_frequency: f64,
    /// Number of resolvable non-DC frequencies, `floor(T/2)`.
    pub n_frequencies: usize,
}

/// Score `2/(N f_s) Σ aᵢ fᵢ` of the per-step Euclidean norm of a `T×d_a` sequence.
///
/// Amplitudes are one-sided, `aᵢ = 2|Xᵢ|/T`, with `fᵢ = i f_s / T` for
/// `i ∈ 1..=floor(T/2)`.
pub fn fft_smoothness(actions: &DMatrix<f64>, sampling_frequency: f64) -> Result<SmoothnessReport> {
    let t = actions.nrows();
    if t < 4 {
        return Err(Error::invalid("smoothness needs at least 4 time steps"));
    }
    if !(sampling_frequency > 0.0) || !sampling_frequency.is_finite() {
        return Err(Error::invalid("sampling frequency must be positive"));
    }
    let norms: alloc::vec::Vec<f64> = actions.row_iter().map(|r| r.norm()).collect();
    if norms.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("action sequence contains non-finite values"));
    }
    let spectrum = fft_real(&norms);
    let n = t / 2;
    let tf = t as f64;
    let sum: f64 = (1..=n)
        .map(|i| {
            let amplitude = 2.0 * spectrum[i].norm() / tf;
            let freq = i as f64 * sampling_frequency / tf;
            amplitude * freq
        })
        .sum();
    Ok(SmoothnessReport {
        score: 2.0 / (n as f64 * sampling_frequency) * sum,
        sampling_frequency,
        n_frequencies: n,
    })
}

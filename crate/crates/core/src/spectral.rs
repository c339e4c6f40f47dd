//! Discrete Fourier transforms.
//!
//! Power-of-two lengths use an iterative radix-2 transform; anything else
//! falls back to the direct O(n²) sum.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

pub fn fft(input: &[Complex64]) -> Vec<Complex64> {
    transform(input, -1.0)
}

/// Inverse transform, scaled by `1/n`.
pub fn ifft(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len() as f64;
    let mut out = transform(input, 1.0);
    for x in &mut out {
        *x /= n;
    }
    out
}

pub fn fft_real(input: &[f64]) -> Vec<Complex64> {
    let c: Vec<Complex64> = input.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft(&c)
}

fn transform(input: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = input.len();
    if n <= 1 {
        return input.to_vec();
    }
    if n.is_power_of_two() {
        radix2(input, sign)
    } else {
        naive(input, sign)
    }
}

fn naive(input: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = input.len();
    (0..n)
        .map(|k| {
            input.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, &x)| {
                // reduce the index product first to keep the angle small
                let phase = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                acc + x * Complex64::new(phase.cos(), phase.sin())
            })
        })
        .collect()
}

fn radix2(input: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = input.len();
    let bits = n.trailing_zeros();
    let mut a: Vec<Complex64> = (0..n)
        .map(|i| input[i.reverse_bits() >> (usize::BITS - bits)])
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for k in 0..half {
            let phase = sign * 2.0 * PI * k as f64 / len as f64;
            let w = Complex64::new(phase.cos(), phase.sin());
            for start in (0..n).step_by(len) {
                let u = a[start + k];
                let v = a[start + k + half] * w;
                a[start + k] = u + v;
                a[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn radix2_matches_direct_sum() {
        let x: Vec<Complex64> =
            (0..64).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos())).collect();
        assert!(close(&radix2(&x, -1.0), &naive(&x, -1.0), 1e-10));
    }

    #[test]
    fn round_trip_any_length() {
        for n in [1, 2, 7, 16, 30] {
            let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
            assert!(close(&ifft(&fft(&x)), &x, 1e-10));
        }
    }

    #[test]
    fn impulse_is_flat() {
        let mut x = alloc::vec![Complex64::new(0.0, 0.0); 8];
        x[0] = Complex64::new(1.0, 0.0);
        assert!(fft(&x).iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }
}

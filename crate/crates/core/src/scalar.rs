//! Derivative-free bounded scalar minimization.
//!
//! A coarse uniform scan locates the basin of the minimum, then Brent's method
//! (golden section steps with parabolic interpolation) refines it inside the
//! two grid cells around the best scan point. The scan makes the search robust
//! to the flat plateaus that temperature objectives have at both ends of the
//! bracket.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Points in the initial scan.
pub const SCAN_POINTS: usize = 64;

const GOLDEN: f64 = 0.381_966_011_250_105_1;
const MAX_BRENT_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

/// Minimizes `f` on `[lo, hi]`; `tol` is the absolute tolerance on the abscissa.
pub fn minimize_scalar<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    minimize_scalar_full(f, lo, hi, tol).map(|m| m.x)
}

pub fn minimize_scalar_full<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::numerical(format!("objective is non-finite at x = {x}")))
        }
    };

    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| if i == SCAN_POINTS - 1 { hi } else { lo + step * i as f64 })
        .collect();
    let mut best = 0;
    let mut values = Vec::with_capacity(SCAN_POINTS);
    for (i, &x) in xs.iter().enumerate() {
        let v = eval(x)?;
        if i == 0 || v < values[best] {
            best = i;
        }
        values.push(v);
    }
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(SCAN_POINTS - 1)];
    let refined = brent(&mut eval, a, b, xs[best], values[best], tol)?;
    if refined.value < values[best] {
        Ok(refined)
    } else {
        Ok(Minimum { x: xs[best], value: values[best] })
    }
}

/// Brent's method on `[a, b]` starting from an interior (or boundary) point `x0`.
fn brent<F>(f: &mut F, mut a: f64, mut b: f64, x0: f64, f0: f64, tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..MAX_BRENT_ITERS {
        let xm = 0.5 * (a + b);
        let tol1 = 1e-12 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            // parabola through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else if d >= 0.0 { x + tol1 } else { x - tol1 };
        let u = u.clamp(a, b);
        let fu = f(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok(Minimum { x, value: fx })
}

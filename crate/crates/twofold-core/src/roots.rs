//! Scalar root finding: bisection for guaranteed brackets, Brent for fast
//! bracketed solves, damped Newton with finite differences for seeds that are
//! already close.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket. Panics in debug builds if the
/// bracket does not change sign; callers establish the bracket first.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa * fb < 0.0, "bisect bracket [{a}, {b}] does not change sign");
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Brent's method on a sign-changing bracket: inverse quadratic
/// interpolation with secant and bisection fallbacks. Panics in debug builds
/// without a sign change.
pub fn brent<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa * fb < 0.0, "brent bracket [{a}, {b}] does not change sign");
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    b
}

/// Newton iteration in one variable with a central finite-difference
/// derivative. Converges when the step falls below `tol`; returns
/// `NewtonDiverged` when the budget runs out or the iterate leaves the
/// finite range.
pub fn newton_1d<F: Fn(f64) -> f64>(f: &F, x0: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut x = x0;
    for it in 0..max_iter {
        let fx = f(x);
        if !fx.is_finite() || !x.is_finite() {
            return Err(Error::NewtonDiverged { iterations: it as u32, residual: fx });
        }
        let h = 1e-7 * x.abs().max(1.0);
        let df = (f(x + h) - f(x - h)) / (2.0 * h);
        if df == 0.0 {
            return Err(Error::NewtonDiverged { iterations: it as u32, residual: fx });
        }
        let step = fx / df;
        x -= step;
        if step.abs() <= tol * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::NewtonDiverged { iterations: max_iter as u32, residual: f(x) })
}

//! Bracketed scalar root finding (Brent–Dekker: secant and inverse
//! quadratic steps, falling back to bisection whenever they misbehave).

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Relative tolerance on the abscissa.
    pub x_rel_tol: f64,
    /// Absolute floor on the abscissa tolerance.
    pub x_abs_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            x_rel_tol: 1e-9,
            x_abs_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Finds `x` in `[lo, hi]` with `f(x) = 0`. `f(lo)` and `f(hi)` must have
/// opposite signs (or one of them must be zero).
pub fn find_root<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: RootOptions,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::numerical("root finder", format!("NaN at bracket [{a}, {b}]")));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numerical(
            "root finder",
            format!("no sign change on [{a}, {b}]: f = ({fa:e}, {fb:e})"),
        ));
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 0.5 * opts.x_abs_tol.max(opts.x_rel_tol * b.abs());
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::numerical("root finder", format!("NaN at x = {b}")));
        }
    }
    Err(Error::numerical(
        "root finder hit the iteration cap",
        format!(
            "{} iterations, bracket [{}, {}], f = ({fb:e}, {fc:e})",
            opts.max_iter,
            b.min(c),
            b.max(c)
        ),
    ))
}

/// Bisection on a monotone predicate: returns the smallest `x` in
/// `(lo, hi]` (to within `step`) where `pred` turns true, given
/// `pred(lo) == false` and `pred(hi) == true`.
pub fn bisect_predicate<P: FnMut(f64) -> bool>(mut pred: P, mut lo: f64, mut hi: f64, step: f64) -> f64 {
    while hi - lo > step {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

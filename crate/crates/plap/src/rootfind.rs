//! Bracketed scalar root finding: Brent's method with guaranteed bisection
//! fallback, plus a uniform sign-change scan.

use crate::error::{Error, Result};

pub struct BrentOpts {
    /// Absolute tolerance on the abscissa.
    pub xtol: f64,
    /// Relative tolerance on the abscissa.
    pub rtol: f64,
    /// Stop early once |f| drops below this (0 disables).
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for BrentOpts {
    fn default() -> Self {
        BrentOpts { xtol: 1e-14, rtol: 4.0 * f64::EPSILON, ftol: 0.0, max_iter: 200 }
    }
}

/// Brent's method on [a, b]; f(a) and f(b) must have opposite signs.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: &BrentOpts) -> Result<f64> {
    let (mut xa, mut xb) = (a, b);
    let (mut fa, mut fb) = (f(xa), f(xb));
    if fa == 0.0 {
        return Ok(xa);
    }
    if fb == 0.0 {
        return Ok(xb);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket(a, b));
    }
    let (mut xc, mut fc) = (xa, fa);
    let mut d = xb - xa;
    let mut e = d;

    for _ in 0..opts.max_iter {
        if fb.signum() == fc.signum() {
            xc = xa;
            fc = fa;
            d = xb - xa;
            e = d;
        }
        if fc.abs() < fb.abs() {
            xa = xb;
            xb = xc;
            xc = xa;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 0.5 * (opts.xtol + opts.rtol * xb.abs());
        let xm = 0.5 * (xc - xb);
        if xm.abs() <= tol1 || fb == 0.0 || (opts.ftol > 0.0 && fb.abs() <= opts.ftol) {
            return Ok(xb);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic interpolation / secant
            let s = fb / fa;
            let (mut pp, mut qq);
            if xa == xc {
                pp = 2.0 * xm * s;
                qq = 1.0 - s;
            } else {
                let q = fa / fc;
                let r = fb / fc;
                pp = s * (2.0 * xm * q * (q - r) - (xb - xa) * (r - 1.0));
                qq = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if pp > 0.0 {
                qq = -qq;
            }
            pp = pp.abs();
            if 2.0 * pp < (3.0 * xm * qq - (tol1 * qq).abs()).min((e * qq).abs()) {
                e = d;
                d = pp / qq;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        xa = xb;
        fa = fb;
        xb += if d.abs() > tol1 { d } else { tol1 * xm.signum() };
        fb = f(xb);
    }
    Ok(xb)
}

/// Evaluates `f` on a uniform grid of `n` points over [lo, hi] and returns
/// every consecutive pair with a strict sign change. Deterministic.
pub fn scan_sign_changes<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    assert!(n >= 2 && hi > lo);
    let h = (hi - lo) / (n - 1) as f64;
    let mut out = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..n {
        let x = lo + i as f64 * h;
        let fx = f(x);
        if f_prev != 0.0 && fx != 0.0 && f_prev.signum() != fx.signum() {
            out.push((x_prev, x));
        }
        x_prev = x;
        f_prev = fx;
    }
    out
}

//! Independent N = 1 solver built on the conserved Hamiltonian.
//!
//! The autonomous equation -(|u'|^{p-2}u')' + u^{p-1} = u^{q-1} conserves
//! H = ((p-1)/p)|u'|^p - G(u) with G(s) = s^p/p - s^q/q. A monotone Neumann
//! orbit starts at u = a with u' = 0, ends at the conjugate value b > 1 with
//! G(b) = G(a), and consumes the domain length
//!
//!   T(a) = ∫_a^b [ (p/(p-1)) (G(u) - G(a)) ]^{-1/p} du.
//!
//! T(a) = 1 characterizes the nondecreasing Neumann solutions, which makes
//! this module a brute-force oracle for the shooting solver.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::rootfind::{brent, scan_sign_changes, BrentOpts};

/// Relative accuracy target of the time-map quadrature.
pub const TOL_TIMEMAP: f64 = 1e-8;

/// Matched Neumann endpoints of one monotone orbit.
#[derive(Debug, Clone, Copy)]
pub struct PhaseData {
    /// Left Neumann value, in (0, 1).
    pub a: f64,
    /// Right Neumann value, in (1, u_max).
    pub b: f64,
    /// Value of the time map at `a`.
    pub time: f64,
}

/// G(s) = s^p/p - s^q/q, the potential of the autonomous equation.
pub fn potential(s: f64, p: f64, q: f64) -> f64 {
    s.powf(p) / p - s.powf(q) / q
}

fn potential_slope(s: f64, p: f64, q: f64) -> f64 {
    s.powf(p - 1.0) - s.powf(q - 1.0)
}

/// The unique b > 1 with G(b) = G(a), for a ∈ (0, 1).
pub fn conjugate_endpoint(a: f64, p: f64, q: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParams(format!("conjugate_endpoint: a = {a}")));
    }
    let ga = potential(a, p, q);
    // G vanishes again exactly at u_max = (q/p)^{1/(q-p)}, above the max at 1
    let s_max = (q / p).powf(1.0 / (q - p));
    let opts = BrentOpts { xtol: 1e-15, ftol: 0.0, ..Default::default() };
    brent(|b| potential(b, p, q) - ga, 1.0 + 1e-12, s_max, &opts)
}

/// Domain length of the monotone orbit from u = a (u' = 0) to its conjugate
/// endpoint. Singularity-aware: on each half the substitution
/// u = end ± t^{p/(p-1)} removes the algebraic endpoint singularity
/// (u - end)^{-1/p} before adaptive quadrature.
pub fn time_map(a: f64, p: f64, q: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParams(format!("time_map: a = {a}")));
    }
    if potential_slope(a, p, q).abs() < 1e-12 {
        return Err(Error::NearEquilibrium(a));
    }
    let b = conjugate_endpoint(a, p, q)?;
    let ga = potential(a, p, q);
    let grading = p / (p - 1.0);
    let speed_coeff = p / (p - 1.0);

    let half = |base: f64, toward: f64| -> f64 {
        // orbit half from `base` to the midpoint, graded at `base`
        let sign = (toward - base).signum();
        let span = (0.5 * (a + b) - base).abs();
        let t_end = span.powf(1.0 / grading);
        let slope = potential_slope(base, p, q).abs();
        // Taylor coefficients of G about the turning point, for use where
        // direct subtraction G(u) - G(base) loses all significant digits
        let g1 = potential_slope(base, p, q);
        let g2 = (p - 1.0) * base.powf(p - 2.0) - (q - 1.0) * base.powf(q - 2.0);
        let g3 = (p - 1.0) * (p - 2.0) * base.powf(p - 3.0)
            - (q - 1.0) * (q - 2.0) * base.powf(q - 3.0);
        let g4 = (p - 1.0) * (p - 2.0) * (p - 3.0) * base.powf(p - 4.0)
            - (q - 1.0) * (q - 2.0) * (q - 3.0) * base.powf(q - 4.0);
        let f = move |t: f64| {
            if t == 0.0 {
                // limit value: the grading exactly cancels the endpoint
                // singularity, leaving grading / (c * G'(base))^{1/p}
                return grading / (speed_coeff * slope).powf(1.0 / p);
            }
            let du = t.powf(grading);
            let u = base + sign * du;
            let ds = sign * du;
            // near the turning point the subtraction below is pure roundoff
            // noise; a four-term expansion is accurate to ~(q·du)^4 there
            let mut gd = if q * du <= 1e-2 {
                ds * (g1 + ds * (g2 / 2.0 + ds * (g3 / 6.0 + ds * g4 / 24.0)))
            } else {
                potential(u, p, q) - ga
            };
            if gd <= 0.0 {
                // roundoff next to the turning point: leading-order expansion
                gd = slope * du;
            }
            grading * t.powf(grading - 1.0) / (speed_coeff * gd).powf(1.0 / p)
        };
        adaptive_simpson(&f, 0.0, t_end, 0.1 * TOL_TIMEMAP)
    };

    Ok(half(a, b) + half(b, a))
}

/// Phase data at `a`: conjugate endpoint and time-map value.
pub fn phase_data(a: f64, p: f64, q: f64) -> Result<PhaseData> {
    let b = conjugate_endpoint(a, p, q)?;
    let time = time_map(a, p, q)?;
    Ok(PhaseData { a, b, time })
}

/// All roots of T(a) = 1 for a in the scan window (10⁻³, 1 - 10⁻³), i.e. the
/// starting values of nondecreasing Neumann solutions. N = 1 only.
pub fn oracle_solve(p: f64, q: f64) -> Result<Vec<f64>> {
    oracle_solve_scanned(p, q, 400)
}

pub fn oracle_solve_scanned(p: f64, q: f64, n_scan: usize) -> Result<Vec<f64>> {
    if !(p > 1.0 && q > p) {
        return Err(Error::InvalidParams(format!("oracle_solve: p = {p}, q = {q}")));
    }
    let miss = |a: f64| time_map(a, p, q).expect("scan window avoids equilibria") - 1.0;
    let brackets = scan_sign_changes(miss, 1e-3, 1.0 - 1e-3, n_scan);
    let opts = BrentOpts { xtol: 1e-12, ..Default::default() };
    let mut roots = Vec::new();
    for (lo, hi) in brackets {
        roots.push(brent(miss, lo, hi, &opts)?);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(roots)
}

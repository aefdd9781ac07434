//! One-step embedded Runge-Kutta pair (Dormand-Prince 5(4)) with adaptive
//! step-size control.
//!
//! Error control is per unit step: a step of size h is accepted when the
//! embedded error estimate is below tol·h, so the accumulated error over the
//! whole radius interval stays of order tol. Output points are hit exactly by
//! clipping the step, never by interpolation.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// Outcome of a guard check applied after every accepted step.
pub enum Guard {
    Continue,
    /// Abort integration; `sign` is forwarded into [`Error::Blowup`].
    Escape { sign: f64 },
}

pub struct IvpOptions {
    /// Local error budget per unit step.
    pub tol: f64,
    pub h_init: f64,
    pub h_max: f64,
}

impl Default for IvpOptions {
    fn default() -> Self {
        IvpOptions { tol: 1e-10, h_init: 1e-4, h_max: 0.05 }
    }
}

/// Integrates y' = f(x, y) from (x0, y0) to x_end.
///
/// `record` is a sorted list of abscissae in (x0, x_end] that the stepper
/// lands on exactly; the state at each is appended to the returned vector.
/// The final state is always returned, whether or not x_end is in `record`.
pub fn integrate<const D: usize>(
    rhs: &dyn Fn(f64, &[f64; D]) -> [f64; D],
    guard: &dyn Fn(f64, &[f64; D]) -> Guard,
    x0: f64,
    y0: [f64; D],
    x_end: f64,
    record: &[f64],
    opts: &IvpOptions,
) -> Result<(Vec<(f64, [f64; D])>, [f64; D])> {
    let mut x = x0;
    let mut y = y0;
    if let Guard::Escape { sign } = guard(x, &y) {
        return Err(Error::Blowup { escape_radius: x, sign });
    }
    let mut h = opts.h_init.min(x_end - x0).min(opts.h_max);
    let mut k1 = rhs(x, &y);
    let mut recorded = Vec::with_capacity(record.len());
    let mut next_rec = 0;
    while next_rec < record.len() && record[next_rec] <= x0 {
        next_rec += 1;
    }

    let h_floor = 1e3 * f64::EPSILON;
    let mut steps = 0usize;
    const MAX_STEPS: usize = 2_000_000;

    while x < x_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepUnderflow(x));
        }
        if h < h_floor * x.abs().max(1.0) {
            return Err(Error::StepUnderflow(x));
        }
        // clip to the next landing point (output abscissa or x_end)
        let target = if next_rec < record.len() { record[next_rec].min(x_end) } else { x_end };
        let landing = h >= target - x;
        let h_try = if landing { target - x } else { h };

        let (y_new, err, k_last) = dp_step(rhs, x, &y, &k1, h_try);
        // the scaled error estimate bottoms out at machine roundoff; without
        // this floor, stiff transients (|y'| huge) reject every step size
        let tol_step = (opts.tol * h_try).max(30.0 * f64::EPSILON);
        let finite = err.is_finite() && y_new.iter().all(|v| v.is_finite());
        if !finite {
            // overflow inside the trial stages: the solution is blowing up
            // faster than the controller can track; shrink hard, and treat a
            // floor-sized non-finite step as the blow-up itself
            if h_try <= h_floor * x.abs().max(1.0) {
                return Err(Error::Blowup { escape_radius: x, sign: y[0].signum() });
            }
            h = 0.5 * h_try;
            continue;
        }
        if err <= tol_step || h_try <= h_floor * x.abs().max(1.0) {
            // accept
            x = if landing { target } else { x + h_try };
            y = y_new;
            k1 = k_last; // FSAL
            match guard(x, &y) {
                Guard::Continue => {}
                Guard::Escape { sign } => {
                    return Err(Error::Blowup { escape_radius: x, sign });
                }
            }
            while next_rec < record.len() && record[next_rec] <= x {
                recorded.push((x, y));
                next_rec += 1;
            }
            if !landing {
                let fac = if err > 0.0 { 0.9 * (tol_step / err).powf(0.2) } else { 5.0 };
                h = (h_try * fac.clamp(0.2, 5.0)).min(opts.h_max);
            }
        } else {
            let fac = 0.9 * (tol_step / err).powf(0.25);
            h = h_try * fac.clamp(0.1, 0.9);
        }
    }
    Ok((recorded, y))
}

/// One Dormand-Prince step; returns (y_new, error norm, k7) with k7 the FSAL
/// derivative at the new point.
fn dp_step<const D: usize>(
    rhs: &dyn Fn(f64, &[f64; D]) -> [f64; D],
    x: f64,
    y: &[f64; D],
    k1: &[f64; D],
    h: f64,
) -> ([f64; D], f64, [f64; D]) {
    let mut t = [0.0; D];
    for i in 0..D {
        t[i] = y[i] + h * A21 * k1[i];
    }
    let k2 = rhs(x + C2 * h, &t);
    for i in 0..D {
        t[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    let k3 = rhs(x + C3 * h, &t);
    for i in 0..D {
        t[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    let k4 = rhs(x + C4 * h, &t);
    for i in 0..D {
        t[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    let k5 = rhs(x + C5 * h, &t);
    for i in 0..D {
        t[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    let k6 = rhs(x + h, &t);
    let mut y_new = [0.0; D];
    for i in 0..D {
        y_new[i] =
            y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    let k7 = rhs(x + h, &y_new);
    let mut err: f64 = 0.0;
    for i in 0..D {
        let e = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        // include the step increment in the scale so the estimate stays
        // meaningful (relative to what the step can resolve) during stiff
        // transients where |h·y'| dwarfs |y|
        let sc = 1.0 + y[i].abs().max(y_new[i].abs()) + (h * k1[i]).abs();
        err = err.max((e / sc).abs());
    }
    (y_new, err, k7)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let rhs = |_x: f64, y: &[f64; 1]| [-y[0]];
        let guard = |_: f64, _: &[f64; 1]| Guard::Continue;
        let (_, yf) =
            integrate(&rhs, &guard, 0.0, [1.0], 1.0, &[], &IvpOptions::default()).unwrap();
        assert!((yf[0] - (-1f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_lands_on_grid() {
        let rhs = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let guard = |_: f64, _: &[f64; 2]| Guard::Continue;
        let grid: Vec<f64> = (1..=10).map(|i| i as f64 * 0.1).collect();
        let (rec, yf) =
            integrate(&rhs, &guard, 0.0, [1.0, 0.0], 1.0, &grid, &IvpOptions::default()).unwrap();
        assert_eq!(rec.len(), 10);
        for (x, y) in &rec {
            assert!((y[0] - x.cos()).abs() < 1e-10, "at x={x}");
        }
        assert!((yf[0] - 1f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn guard_aborts() {
        let rhs = |_x: f64, y: &[f64; 1]| [y[0]];
        let guard = |_: f64, y: &[f64; 1]| {
            if y[0] > 2.0 {
                Guard::Escape { sign: 1.0 }
            } else {
                Guard::Continue
            }
        };
        let res = integrate(&rhs, &guard, 0.0, [1.0], 5.0, &[], &IvpOptions::default());
        match res {
            Err(Error::Blowup { escape_radius, sign }) => {
                assert!(sign > 0.0);
                assert!(escape_radius > 0.5 && escape_radius < 1.0);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn tolerance_scaling() {
        // halving the tolerance reduces the endpoint error
        let rhs = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let guard = |_: f64, _: &[f64; 2]| Guard::Continue;
        let run = |tol: f64| {
            let opts = IvpOptions { tol, ..Default::default() };
            let (_, yf) = integrate(&rhs, &guard, 0.0, [1.0, 0.0], 3.0, &[], &opts).unwrap();
            (yf[0] - 3f64.cos()).abs()
        };
        assert!(run(1e-12) < run(1e-6));
        assert!(run(1e-6) < 1e-6);
    }
}

//! Radial initial value problem for the quasilinear Neumann equation in flux
//! formulation:
//!
//!   u' = sign(w)|w|^{1/(p-1)},    w' = (u^{p-1} - u^{q-1}) - (N-1) w / r,
//!
//! where w = |u'|^{p-2}u' is the flux. Integrating (u, w) instead of (u, u')
//! keeps one formulation valid for every p > 1. The r = 0 singularity is
//! handled by a leading-order series start at r0.

use std::io::Write;

use crate::error::{Error, Result};
use crate::ivp::{self, Guard, IvpOptions};
use crate::problem::ProblemParams;

/// Default series-start radius. Below this the leading-order expansion error
/// is negligible relative to the default integration tolerance.
pub const R0: f64 = 1e-6;
/// Default local error budget per unit radius.
pub const TOL_ODE: f64 = 1e-10;
/// Default number of output grid points.
pub const N_OUT: usize = 1001;

/// Norm integrals carried alongside the trajectory as extra ODE states, so
/// they inherit the integrator's accuracy instead of a quadrature rule's.
/// This matters because u' behaves like a fractional power of the distance
/// to the endpoints (degenerate diffusion for p ≠ 2), which caps the order
/// of any grid-based quadrature of |u'|^p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormMoments {
    /// ω_{N-1} ∫₀¹ r^{N-1} (|u'|^p + |u|^p) dr
    pub w1p_pow: f64,
    /// ω_{N-1} ∫₀¹ r^{N-1} |u|^q dr
    pub lq_pow: f64,
    /// ω_{N-1} ∫₀¹ r^{N-1} (|u'|^p/p + |u|^p/p - |u|^q/q) dr, accumulated
    /// independently of the other two moments
    pub energy_via_f: f64,
}

/// A radial function sampled on a grid of radii in [0, 1], with value and
/// flux arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub fluxes: Vec<f64>,
    pub params: ProblemParams,
    /// Present when the profile came out of the initial value solver.
    pub moments: Option<NormMoments>,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// u'(r_i) recovered from the stored flux.
    pub fn velocity(&self, i: usize) -> f64 {
        velocity_from_flux(self.fluxes[i], self.params.p)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_velocity(&self) -> f64 {
        (0..self.len()).map(|i| self.velocity(i)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_grid(&self, other: &RadialProfile) -> bool {
        self.len() == other.len()
            && self
                .radii
                .iter()
                .zip(&other.radii)
                .all(|(a, b)| (a - b).abs() <= 1e-12)
    }

    /// CSV with header "r,u,w", full double precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,u,w")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.17e},{:.17e},{:.17e}",
                self.radii[i], self.values[i], self.fluxes[i]
            )?;
        }
        Ok(())
    }
}

/// Inverts the flux map: returns sign(w)·|w|^{1/(p-1)}; odd in w.
pub fn velocity_from_flux(w: f64, p: f64) -> f64 {
    sgn_pow(w, 1.0 / (p - 1.0))
}

/// sign(x)·|x|^e, the odd power used throughout.
pub fn sgn_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

/// g(s) = s^{p-1} - s^{q-1}, extended as an odd function for transient
/// negative values during shooting.
pub fn reaction(s: f64, p: f64, q: f64) -> f64 {
    sgn_pow(s, p - 1.0) - sgn_pow(s, q - 1.0)
}

/// Leading-order state at r0 for the start value u(0) = d, u'(0) = 0:
/// w0 = g(d) r0 / N, and u0 consistent with the exact integral identity
/// r^{N-1} w(r) = ∫₀^r s^{N-1} g(u(s)) ds to leading order.
pub fn series_start(params: &ProblemParams, d: f64, r0: f64) -> Result<(f64, f64)> {
    if !(d > 0.0) {
        return Err(Error::InvalidParams(format!("series_start: d = {d}")));
    }
    let (p, q, n) = (params.p, params.q, params.n as f64);
    let g = reaction(d, p, q);
    let w0 = g * r0 / n;
    let u0 = d
        + w0.signum()
            * (g.abs() / n).powf(1.0 / (p - 1.0))
            * r0.powf(p / (p - 1.0))
            * (p - 1.0)
            / p;
    Ok((u0, w0))
}

fn rhs(params: &ProblemParams) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    let (p, q, nm1) = (params.p, params.q, params.n as f64 - 1.0);
    move |r: f64, y: &[f64; 2]| {
        let du = velocity_from_flux(y[1], p);
        let dw = reaction(y[0], p, q) - if nm1 > 0.0 { nm1 * y[1] / r } else { 0.0 };
        [du, dw]
    }
}

/// State (u, w) augmented with the three norm moments of [`NormMoments`].
fn rhs_with_moments(params: &ProblemParams) -> impl Fn(f64, &[f64; 5]) -> [f64; 5] + '_ {
    let (p, q, nm1, omega) = (params.p, params.q, params.n as f64 - 1.0, params.omega);
    move |r: f64, y: &[f64; 5]| {
        let du = velocity_from_flux(y[1], p);
        let dw = reaction(y[0], p, q) - if nm1 > 0.0 { nm1 * y[1] / r } else { 0.0 };
        let weight = if nm1 > 0.0 { omega * r.powf(nm1) } else { omega };
        // |u'|^p computed from the flux directly: |w|^{p/(p-1)}
        let dup = y[1].abs().powf(p / (p - 1.0));
        let up = y[0].abs().powf(p);
        let uq = y[0].abs().powf(q);
        [
            du,
            dw,
            weight * (dup + up),
            weight * uq,
            weight * ((dup + up) / p - uq / q),
        ]
    }
}

/// Escape test for positive-solution shooting: crossing u = 0 means the
/// trajectory undershot (no positive Neumann solution from this start), and
/// u above the cap means it blew up. Either way the sign records the escape
/// direction for bracketing.
fn escape_guard(cap: f64) -> impl Fn(f64, &[f64; 2]) -> Guard {
    move |_r: f64, y: &[f64; 2]| {
        if y[0] < 0.0 {
            Guard::Escape { sign: -1.0 }
        } else if y[0] > cap {
            Guard::Escape { sign: 1.0 }
        } else {
            Guard::Continue
        }
    }
}

/// Rejects starts that escape faster than the series start can resolve:
/// either the leading-order correction at r0 is no longer small against d
/// (the expansion has already broken down) or the initial velocity would
/// sweep the trajectory across the whole admissible range many orders of
/// magnitude faster than any step the integrator could take.
fn check_immediate_escape(params: &ProblemParams, d: f64, u0: f64, w0: f64, s0: f64) -> Result<()> {
    let v0 = velocity_from_flux(w0, params.p);
    if (u0 - d).abs() > 0.1 * d || v0.abs() > 1e9 * (s0 + 2.0) {
        return Err(Error::Blowup { escape_radius: R0, sign: w0.signum() });
    }
    Ok(())
}

/// Integrates the trajectory started at u(0) = d out to r = 1 and reports it
/// on a uniform grid of `n_out` points including r = 0 and r = 1. The state
/// (d, 0) is reported at r = 0.
pub fn integrate(
    params: &ProblemParams,
    d: f64,
    n_out: usize,
    tol_ode: f64,
) -> Result<RadialProfile> {
    if n_out < 2 {
        return Err(Error::InvalidParams(format!("integrate: n_out = {n_out}")));
    }
    let s0 = params.derived().s0;
    if !(d > 0.0 && d <= s0) {
        return Err(Error::InvalidParams(format!("integrate: d = {d} outside (0, s0]")));
    }
    let grid: Vec<f64> =
        (0..n_out).map(|i| i as f64 / (n_out - 1) as f64).collect();

    // exact equilibrium: the moments reduce to multiples of the ball volume
    if d == 1.0 {
        let vol = params.ball_volume;
        return Ok(RadialProfile {
            values: vec![1.0; n_out],
            fluxes: vec![0.0; n_out],
            radii: grid,
            params: *params,
            moments: Some(NormMoments {
                w1p_pow: vol,
                lq_pow: vol,
                energy_via_f: vol * (1.0 / params.p - 1.0 / params.q),
            }),
        });
    }

    let (u0, w0) = series_start(params, d, R0)?;
    check_immediate_escape(params, d, u0, w0, s0)?;
    let opts = IvpOptions { tol: tol_ode, ..Default::default() };
    let f = rhs_with_moments(params);
    let cap = s0 + 1.0;
    let g = move |_r: f64, y: &[f64; 5]| {
        if y[0] < 0.0 {
            Guard::Escape { sign: -1.0 }
        } else if y[0] > cap {
            Guard::Escape { sign: 1.0 }
        } else {
            Guard::Continue
        }
    };
    // moments over [0, r0] to leading order (u ≈ d, u' ≈ 0)
    let nf = params.n as f64;
    let head = params.omega * R0.powf(nf) / nf;
    let (dp, dq) = (d.powf(params.p), d.powf(params.q));
    let z0 = [
        head * dp,
        head * dq,
        head * (dp / params.p - dq / params.q),
    ];
    let y0 = [u0, w0, z0[0], z0[1], z0[2]];
    let (rec, y_end) = ivp::integrate(&f, &g, R0, y0, 1.0, &grid[1..], &opts)?;

    let mut values = Vec::with_capacity(n_out);
    let mut fluxes = Vec::with_capacity(n_out);
    values.push(d);
    fluxes.push(0.0);
    for (_, y) in rec {
        values.push(y[0]);
        fluxes.push(y[1]);
    }
    debug_assert_eq!(values.len(), n_out);
    Ok(RadialProfile {
        radii: grid,
        values,
        fluxes,
        params: *params,
        moments: Some(NormMoments {
            w1p_pow: y_end[2],
            lq_pow: y_end[3],
            energy_via_f: y_end[4],
        }),
    })
}

/// Fast path for shooting: integrates to r = 1 without producing the output
/// grid and returns the terminal state (u(1), w(1)).
pub fn integrate_terminal(params: &ProblemParams, d: f64, tol_ode: f64) -> Result<(f64, f64)> {
    let s0 = params.derived().s0;
    if !(d > 0.0 && d <= s0) {
        return Err(Error::InvalidParams(format!("integrate_terminal: d = {d}")));
    }
    if d == 1.0 {
        return Ok((1.0, 0.0));
    }
    let (u0, w0) = series_start(params, d, R0)?;
    check_immediate_escape(params, d, u0, w0, s0)?;
    let opts = IvpOptions { tol: tol_ode, ..Default::default() };
    let f = rhs(params);
    let g = escape_guard(s0 + 1.0);
    let (_, y) = ivp::integrate(&f, &g, R0, [u0, w0], 1.0, &[], &opts)?;
    Ok((y[0], y[1]))
}

/// First integral of the N = 1 equation:
/// H = ((p-1)/p)|u'|^p - u^p/p + u^q/q, with |u'|^p = |w|^{p/(p-1)}.
pub fn hamiltonian(u: f64, w: f64, p: f64, q: f64) -> f64 {
    (p - 1.0) / p * w.abs().powf(p / (p - 1.0)) - u.abs().powf(p) / p + u.abs().powf(q) / q
}

/// Maximum Hamiltonian drift |H(r) - H(0)| along an N = 1 profile.
pub fn hamiltonian_drift(profile: &RadialProfile) -> f64 {
    let (p, q) = (profile.params.p, profile.params.q);
    let h0 = hamiltonian(profile.values[0], profile.fluxes[0], p, q);
    (0..profile.len())
        .map(|i| (hamiltonian(profile.values[i], profile.fluxes[i], p, q) - h0).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(p: f64, q: f64, n: u32) -> ProblemParams {
        ProblemParams::new(p, q, n).unwrap()
    }

    #[test]
    fn velocity_examples() {
        assert_eq!(velocity_from_flux(0.0, 1.7), 0.0);
        assert_eq!(velocity_from_flux(1.0, 2.0), 1.0);
        assert!((velocity_from_flux(-8.0, 2.5) - (-4.0)).abs() < 1e-14);
    }

    #[test]
    fn series_start_examples() {
        let pr = params(2.0, 30.0, 1);
        let (u0, w0) = series_start(&pr, 1.0, 1e-4).unwrap();
        assert_eq!((u0, w0), (1.0, 0.0));

        let (_, w0) = series_start(&pr, 0.5, 1e-4).unwrap();
        let expect = (0.5 - 0.5f64.powi(29)) * 1e-4;
        assert!((w0 - expect).abs() < 1e-18);

        let pr3 = params(2.0, 3.0, 3);
        let (_, w0) = series_start(&pr3, 0.5, 1e-4).unwrap();
        assert!((w0 - (0.5 - 0.25) * 1e-4 / 3.0).abs() < 1e-18);

        assert!(series_start(&pr, -0.5, 1e-4).is_err());
    }

    #[test]
    fn constant_profile_exact() {
        let pr = params(1.7, 12.0, 2);
        let prof = integrate(&pr, 1.0, 101, TOL_ODE).unwrap();
        assert!(prof.values.iter().all(|&u| u == 1.0));
        assert!(prof.fluxes.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn hamiltonian_conserved_n1() {
        let pr = params(2.0, 30.0, 1);
        let prof = integrate(&pr, 0.9, N_OUT, TOL_ODE).unwrap();
        let h0 = hamiltonian(0.9, 0.0, 2.0, 30.0);
        assert!((h0 - (-(0.9f64.powi(2)) / 2.0 + 0.9f64.powi(30) / 30.0)).abs() < 1e-16);
        let drift = hamiltonian_drift(&prof);
        assert!(drift <= 10.0 * TOL_ODE * (1.0 + h0.abs()), "drift = {drift:e}");
    }

    #[test]
    fn terminal_flux_matches_phase_curve() {
        // |w(1)| implied by energy conservation through u(1), cross-checked
        // against the integrated flux.
        let pr = params(2.0, 30.0, 1);
        let (u1, w1) = integrate_terminal(&pr, 0.9, TOL_ODE).unwrap();
        let g = |s: f64| s.powf(2.0) / 2.0 - s.powf(30.0) / 30.0;
        let kinetic = (2.0 * (g(u1) - g(0.9))).max(0.0);
        let w_pred = kinetic.sqrt(); // p = 2: w = u'
        assert!((w1.abs() - w_pred).abs() < 1e-6, "w1 = {w1}, pred = {w_pred}");
    }

    #[test]
    fn sign_structure_near_center() {
        let pr = params(1.6, 20.0, 1);
        let prof = integrate(&pr, 0.7, 201, TOL_ODE).unwrap();
        assert!(prof.fluxes[1] > 0.0);
        let prof = integrate(&pr, 1.1, 201, TOL_ODE).unwrap();
        assert!(prof.fluxes[1] < 0.0);
    }

    #[test]
    fn self_convergence_under_tolerance_halving() {
        let pr = params(1.8, 30.0, 1);
        for &tol in &[1e-8, 1e-9, 1e-10] {
            let coarse = integrate_terminal(&pr, 0.8, tol).unwrap();
            let fine = integrate_terminal(&pr, 0.8, tol / 2.0).unwrap();
            assert!(
                (coarse.0 - fine.0).abs() < tol,
                "tol = {tol:e}, diff = {:e}",
                (coarse.0 - fine.0).abs()
            );
        }
    }

    #[test]
    fn blowup_reports_escape() {
        let pr = params(2.0, 30.0, 1);
        let s0 = pr.derived().s0;
        // d slightly below s0 blows up well before r = 1
        match integrate_terminal(&pr, s0 * 0.9999, TOL_ODE) {
            Err(Error::Blowup { escape_radius, sign }) => {
                assert!(escape_radius < 1.0);
                assert!(sign != 0.0);
            }
            Ok((u1, _)) => {
                // if it survives to r = 1 it must at least stay below the cap
                assert!(u1.abs() <= 10.0 * s0);
            }
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn csv_header_and_shape() {
        let pr = params(2.0, 30.0, 1);
        let prof = integrate(&pr, 0.9, 11, TOL_ODE).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r,u,w");
        assert_eq!(lines.count(), 11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn velocity_is_odd(w in -50.0f64..50.0, p in 1.05f64..4.0) {
            let v = velocity_from_flux(w, p);
            let vm = velocity_from_flux(-w, p);
            prop_assert!((v + vm).abs() <= 1e-12 * v.abs().max(1.0));
            // inverse of the flux map
            let back = sgn_pow(v, p - 1.0);
            prop_assert!((back - w).abs() <= 1e-9 * w.abs().max(1.0));
        }
    }

    #[test]
    fn hamiltonian_conserved_various_p() {
        for &(p, q, d) in
            &[(1.5, 10.0, 0.6), (2.5, 5.0, 0.9), (3.0, 6.0, 1.1), (1.8, 60.0, 0.95)]
        {
            let pr = params(p, q, 1);
            let prof = integrate(&pr, d, N_OUT, TOL_ODE).unwrap();
            let h0 = hamiltonian(d, 0.0, p, q);
            let drift = hamiltonian_drift(&prof);
            assert!(
                drift <= 10.0 * TOL_ODE * (1.0 + h0.abs()),
                "p={p} q={q} d={d}: drift = {drift:e}"
            );
        }
    }
}

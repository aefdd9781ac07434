//! Truncated nonlinearity, energy functional, norms with the radial measure,
//! Nehari projection and ground-state classification.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::ProblemParams;
use crate::quad::simpson_uniform;
use crate::radial_ode::RadialProfile;
use crate::shooter::{Kind, Solution};

/// Norms and energy of a radial profile.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyReport {
    /// ∫_B (|∇u|^p + |u|^p) dx
    pub w1p_norm_pow: f64,
    /// ∫_B u^q dx
    pub lq_norm_pow: f64,
    /// I_p(u)
    pub energy: f64,
    /// Nehari projection scalar h(u)
    pub nehari_h: f64,
    /// |w1p_norm_pow - lq_norm_pow| / w1p_norm_pow
    pub nehari_residual: f64,
}

/// Truncated nonlinearity: s^{q-1} up to s₀, then continued with subcritical
/// growth ℓ so that f_q stays C¹ at s₀.
pub fn f_q(s: f64, params: &ProblemParams) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::InvalidParams(format!("f_q: s = {s}")));
    }
    let q = params.q;
    let d = params.derived();
    let (s0, ell) = (d.s0, d.ell);
    Ok(if s <= s0 {
        s.powf(q - 1.0)
    } else {
        s0.powf(q - 1.0)
            + (q - 1.0) / (ell - 1.0) * s0.powf(q - ell) * (s.powf(ell - 1.0) - s0.powf(ell - 1.0))
    })
}

/// Exact antiderivative of f_q with F_q(0) = 0.
pub fn big_f_q(s: f64, params: &ProblemParams) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::InvalidParams(format!("F_q: s = {s}")));
    }
    let q = params.q;
    let d = params.derived();
    let (s0, ell) = (d.s0, d.ell);
    Ok(if s <= s0 {
        s.powf(q) / q
    } else {
        // term-by-term integral of the truncated tail from s0 to s
        s0.powf(q) / q
            + s0.powf(q - 1.0) * (s - s0)
            + (q - 1.0) / (ell - 1.0)
                * s0.powf(q - ell)
                * ((s.powf(ell) - s0.powf(ell)) / ell - s0.powf(ell - 1.0) * (s - s0))
    })
}

/// ω_{N-1} ∫₀¹ r^{N-1} integrand(u(r), u'(r)) dr by composite Simpson on the
/// profile grid. u' is recovered from the stored flux, never by finite
/// differences.
pub fn radial_integral<F: Fn(f64, f64) -> f64>(profile: &RadialProfile, integrand: F) -> f64 {
    let n = profile.len();
    let nm1 = profile.params.n as f64 - 1.0;
    let h = profile.radii[1] - profile.radii[0];
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let weight =
                if nm1 == 0.0 { 1.0 } else { profile.radii[i].powf(nm1) };
            weight * integrand(profile.values[i], profile.velocity(i))
        })
        .collect();
    profile.params.omega * simpson_uniform(&vals, h)
}

/// Energy and norms of a nonnegative profile. The energy is computed through
/// F_q; below the truncation level this coincides with the closed form
/// ‖u‖^p_{W^{1,p}}/p - ‖u‖^q_{L^q}/q (see [`energy_two_ways`]).
pub fn energy(profile: &RadialProfile) -> Result<EnergyReport> {
    let (p, q) = (profile.params.p, profile.params.q);
    // moments carried by the initial value solver are far more accurate than
    // any quadrature on the output grid (u' is a fractional power of the
    // distance to the endpoints when p ≠ 2, capping grid-quadrature order);
    // they use the plain power u^q, which matches the truncated functional
    // only while the profile stays below s₀
    if let Some(m) = profile.moments {
        if profile.max_value() <= profile.params.derived().s0 {
            let closed = m.w1p_pow / p - m.lq_pow / q;
            debug_assert!(
                (m.energy_via_f - closed).abs() <= 1e-10 * closed.abs().max(1e-30),
                "energy routes disagree: {} vs {closed}",
                m.energy_via_f
            );
            return Ok(EnergyReport {
                w1p_norm_pow: m.w1p_pow,
                lq_norm_pow: m.lq_pow,
                energy: m.energy_via_f,
                nehari_h: m.w1p_pow / m.lq_pow,
                nehari_residual: (m.w1p_pow - m.lq_pow).abs() / m.w1p_pow,
            });
        }
    }
    let w1p = radial_integral(profile, |u, du| du.abs().powf(p) + u.abs().powf(p));
    let lq = radial_integral(profile, |u, _| u.abs().powf(q));
    let via_f = radial_integral(profile, |u, du| {
        du.abs().powf(p) / p + u.abs().powf(p) / p
            - big_f_q(u.max(0.0), &profile.params).expect("u >= 0")
    });
    let s0 = profile.params.derived().s0;
    if profile.max_value() <= s0 {
        let closed = w1p / p - lq / q;
        debug_assert!(
            (via_f - closed).abs() <= 1e-10 * closed.abs().max(1e-30),
            "energy routes disagree: {via_f} vs {closed}"
        );
    }
    Ok(EnergyReport {
        w1p_norm_pow: w1p,
        lq_norm_pow: lq,
        energy: via_f,
        nehari_h: w1p / lq,
        nehari_residual: (w1p - lq).abs() / w1p,
    })
}

/// Both energy routes: (via F_q, via the closed form). They must agree to
/// 10⁻¹⁰ relative whenever max u ≤ s₀.
pub fn energy_two_ways(profile: &RadialProfile) -> Result<(f64, f64)> {
    let rep = energy(profile)?;
    let (p, q) = (profile.params.p, profile.params.q);
    Ok((rep.energy, rep.w1p_norm_pow / p - rep.lq_norm_pow / q))
}

/// Energy of the constant solution u ≡ 1: |B| (1/p - 1/q).
pub fn constant_energy(params: &ProblemParams) -> f64 {
    params.ball_volume * (1.0 / params.p - 1.0 / params.q)
}

/// The unique h > 0 with h·u on the Nehari set, in the closed form valid for
/// max u ≤ s₀: h = ∫_B(|∇u|^p + u^p) dx / ∫_B u^q dx.
pub fn nehari_project(profile: &RadialProfile) -> Result<f64> {
    let rep = energy(profile)?;
    if rep.lq_norm_pow <= 0.0 {
        return Err(Error::InvalidParams("nehari_project: zero profile".into()));
    }
    Ok(rep.nehari_h)
}

/// W^{1,s}-norm power ∫_B(|∇u|^s + |u|^s) dx for an arbitrary exponent s
/// (used when projecting a fixed profile with nearby exponents).
pub fn w1s_norm_pow(profile: &RadialProfile, s: f64) -> f64 {
    radial_integral(profile, |u, du| du.abs().powf(s) + u.abs().powf(s))
}

/// Classification over a finite solution set: the constant keeps its kind,
/// the minimal-energy solution becomes the ground state (ties broken toward
/// smaller u0), and remaining nonconstant solutions above the constant
/// energy level are marked higher-energy.
pub fn classify(mut solutions: Vec<Solution>) -> Result<Vec<Solution>> {
    if solutions.is_empty() {
        return Err(Error::InvalidParams("classify: empty input".into()));
    }
    let params = solutions[0].profile.params;
    let i1 = constant_energy(&params);

    for s in &mut solutions {
        s.kind = if s.is_constant() { Kind::Constant } else { Kind::Unclassified };
    }
    let min_idx = (0..solutions.len())
        .min_by(|&a, &b| {
            let (sa, sb) = (&solutions[a], &solutions[b]);
            sa.energy
                .partial_cmp(&sb.energy)
                .unwrap()
                .then(sa.u0.partial_cmp(&sb.u0).unwrap())
        })
        .unwrap();
    if !solutions[min_idx].is_constant() {
        solutions[min_idx].kind = Kind::GroundState;
    }
    for s in &mut solutions {
        if s.kind == Kind::Unclassified && !s.is_constant() && s.energy > i1 {
            s.kind = Kind::HigherEnergy;
        }
    }
    Ok(solutions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use crate::radial_ode::sgn_pow;
    use proptest::prelude::*;

    fn params(p: f64, q: f64, n: u32) -> ProblemParams {
        ProblemParams::new(p, q, n).unwrap()
    }

    /// Profile with prescribed u(r) and u'(r) on a uniform grid.
    fn synthetic(
        pr: &ProblemParams,
        n: usize,
        u: impl Fn(f64) -> f64,
        du: impl Fn(f64) -> f64,
    ) -> RadialProfile {
        let radii: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let values = radii.iter().map(|&r| u(r)).collect();
        let fluxes = radii.iter().map(|&r| sgn_pow(du(r), pr.p - 1.0)).collect();
        RadialProfile { radii, values, fluxes, params: *pr, moments: None }
    }

    #[test]
    fn f_q_basics() {
        let pr = params(2.0, 30.0, 1);
        assert_eq!(f_q(0.0, &pr).unwrap(), 0.0);
        assert_eq!(f_q(1.0, &pr).unwrap(), 1.0);
        assert!(f_q(-0.1, &pr).is_err());
    }

    #[test]
    fn f_q_c1_matching_at_s0() {
        for (p, q, n) in [(2.0, 30.0, 1u32), (1.5, 60.0, 1), (2.5, 5.0, 3)] {
            let pr = params(p, q, n);
            let s0 = pr.derived().s0;
            let eps = 1e-7;
            let below = f_q(s0 - eps, &pr).unwrap();
            let above = f_q(s0 + eps, &pr).unwrap();
            let at = f_q(s0, &pr).unwrap();
            assert!((below - at).abs() < 1e-4 * at);
            assert!((above - at).abs() < 1e-4 * at);
            // one-sided derivatives both equal (q-1) s0^{q-2}
            let dl = (at - below) / eps;
            let dr = (above - at) / eps;
            let exact = (q - 1.0) * s0.powf(q - 2.0);
            assert!((dl - exact).abs() < 1e-2 * exact);
            assert!((dr - exact).abs() < 1e-2 * exact);
        }
    }

    #[test]
    fn big_f_q_matches_quadrature_above_s0() {
        let pr = params(2.0, 30.0, 1);
        let s0 = pr.derived().s0;
        let s = 1.5 * s0;
        let numeric = adaptive_simpson(&|t: f64| f_q(t, &pr).unwrap(), 0.0, s, 1e-12);
        let exact = big_f_q(s, &pr).unwrap();
        assert!((numeric - exact).abs() <= 1e-10 * exact.abs(), "{numeric} vs {exact}");
        // and below s0 it is the plain power rule
        assert!((big_f_q(0.9, &pr).unwrap() - 0.9f64.powi(30) / 30.0).abs() < 1e-16);
        assert_eq!(big_f_q(0.0, &pr).unwrap(), 0.0);
    }

    #[test]
    fn radial_integral_examples() {
        let pr = params(2.0, 30.0, 1);
        let prof = synthetic(&pr, 101, |_| 1.0, |_| 0.0);
        let v = radial_integral(&prof, |u, _| u.powf(pr.p));
        assert!((v - 2.0).abs() < 1e-12);

        let pr3 = params(2.0, 30.0, 3);
        let prof3 = synthetic(&pr3, 101, |_| 1.0, |_| 0.0);
        let v = radial_integral(&prof3, |u, _| u.powf(pr3.p));
        assert!((v - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-10);

        let lin = synthetic(&pr, 101, |r| r, |_| 1.0);
        let v = radial_integral(&lin, |u, _| u * u);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_energy_example() {
        let pr = params(2.0, 30.0, 1);
        let prof = synthetic(&pr, 101, |_| 1.0, |_| 0.0);
        let rep = energy(&prof).unwrap();
        assert!((rep.energy - 2.0 * (0.5 - 1.0 / 30.0)).abs() < 1e-12);
        assert!((rep.energy - constant_energy(&pr)).abs() < 1e-12);
        assert!((rep.nehari_h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nehari_constant_scaling() {
        let pr = params(1.7, 12.0, 1);
        let mut prev = f64::INFINITY;
        for c in [0.5, 0.8, 1.0, 1.3, 1.5] {
            let prof = synthetic(&pr, 101, |_| c, |_| 0.0);
            let h = nehari_project(&prof).unwrap();
            let exact = c.powf(pr.p - pr.q);
            assert!((h - exact).abs() <= 1e-12 * exact, "c = {c}");
            assert!(h < prev, "h must decrease in c");
            prev = h;
        }
    }

    #[test]
    fn nehari_rejects_zero() {
        let pr = params(2.0, 30.0, 1);
        let prof = synthetic(&pr, 101, |_| 0.0, |_| 0.0);
        assert!(nehari_project(&prof).is_err());
    }

    #[test]
    fn energy_two_routes_agree_below_s0() {
        let pr = params(2.0, 30.0, 1);
        let prof = crate::radial_ode::integrate(&pr, 0.9, 1001, 1e-10).unwrap();
        let (via_f, closed) = energy_two_ways(&prof).unwrap();
        assert!((via_f - closed).abs() <= 1e-10 * closed.abs().max(1e-30));
    }

    #[test]
    fn classify_rejects_empty() {
        assert!(classify(Vec::new()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn antiderivative_slope_is_f_q(
            s in 0.01f64..4.0, p in 1.1f64..3.0, dq in 1.0f64..30.0
        ) {
            let pr = params(p, p + dq, 1);
            let eps = 1e-6 * s.max(1.0);
            let slope =
                (big_f_q(s + eps, &pr).unwrap() - big_f_q(s - eps, &pr).unwrap()) / (2.0 * eps);
            let f = f_q(s, &pr).unwrap();
            prop_assert!((slope - f).abs() <= 1e-4 * f.abs().max(1.0));
        }
    }
}

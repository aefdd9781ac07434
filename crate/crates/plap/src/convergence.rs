//! Convergence experiments in the exponent: builds ground states at
//! p_n = p ± 2^{-k} and measures their distance to the ground state at p in
//! W^{1,p}, a Hölder seminorm, and the sup norm, together with energy and
//! Nehari-projection limits.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::ProblemParams;
use crate::radial_ode::RadialProfile;
use crate::shooter::{self, Kind, ShootConfig, Solution};
use crate::variational;

/// Final-step tolerances entering the verdict.
pub const TOL_W1P: f64 = 1e-2;
pub const TOL_HOLDER: f64 = 1e-2;
pub const TOL_SUP: f64 = 1e-2;
pub const TOL_ENERGY: f64 = 1e-3;
pub const TOL_NEHARI: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
    Both,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "below" => Ok(Side::Below),
            "above" => Ok(Side::Above),
            "both" => Ok(Side::Both),
            other => Err(Error::InvalidParams(format!("side: {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceStep {
    pub k: u32,
    pub p_n: f64,
    pub w1p_diff: f64,
    pub holder_diff: f64,
    pub sup_diff: f64,
    /// I_{p_n}(u_{p_n})
    pub energy_n: f64,
    /// h_{p_n} applied to the fixed target ground state
    pub h_of_gs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub p_target: f64,
    pub q: f64,
    #[serde(rename = "N")]
    pub n: u32,
    pub side: Side,
    pub beta: f64,
    /// Ordered by |p_n - p_target| decreasing (within each side).
    pub steps: Vec<ConvergenceStep>,
    pub energy_target: f64,
    pub verdict: bool,
    /// Steps without a nonconstant ground state, excluded from the verdict.
    pub warnings: Vec<String>,
    /// Sup distance between the extrapolated one-sided limit profiles
    /// (side = both only).
    pub limit_gap: Option<f64>,
}

/// (W^{1,p} norm of a-b, C^{0,β} seminorm of a-b, sup norm of a-b) on the
/// shared grid, with the radial ball measure.
pub fn difference_norms(
    a: &RadialProfile,
    b: &RadialProfile,
    p: f64,
    beta: f64,
) -> Result<(f64, f64, f64)> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParams(format!("beta = {beta}")));
    }
    let n = a.len();
    let d: Vec<f64> = (0..n).map(|i| a.values[i] - b.values[i]).collect();
    let dv: Vec<f64> = (0..n).map(|i| a.velocity(i) - b.velocity(i)).collect();

    let nm1 = a.params.n as f64 - 1.0;
    let h = a.radii[1] - a.radii[0];
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let weight = if nm1 == 0.0 { 1.0 } else { a.radii[i].powf(nm1) };
            weight * (dv[i].abs().powf(p) + d[i].abs().powf(p))
        })
        .collect();
    let w1p = (a.params.omega * crate::quad::simpson_uniform(&vals, h)).powf(1.0 / p);

    // exhaustive Hölder quotient; |r_i - r_j|^{-β} depends only on j - i on
    // the uniform grid, so precompute one table of gap weights
    let inv_gap_pow: Vec<f64> = (0..n).map(|k| (h * k as f64).powf(-beta)).collect();
    let mut holder = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let quot = (d[i] - d[j]).abs() * inv_gap_pow[j - i];
            if quot > holder {
                holder = quot;
            }
        }
    }
    let sup = d.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    Ok((w1p, holder, sup))
}

/// The Nehari projection scalar of a fixed profile under the exponent s:
/// the unique h > 0 with ∫(|∇(hu)|^s + (hu)^s) = ∫(hu)^q, valid while
/// h · max u stays below the truncation level.
pub fn nehari_h_at(profile: &RadialProfile, s: f64) -> f64 {
    let q = profile.params.q;
    let w = variational::w1s_norm_pow(profile, s);
    let lq = variational::radial_integral(profile, |u, _| u.abs().powf(q));
    (w / lq).powf(1.0 / (q - s))
}

fn ground_state(
    p: f64,
    q: f64,
    n: u32,
    cfg: &ShootConfig,
    n_scan: usize,
    u0_hint: Option<f64>,
) -> Result<Option<Solution>> {
    let params = ProblemParams::new(p, q, n)?;
    let sols = variational::classify(shooter::solve_report(&params, n_scan, cfg)?.solutions)?;
    let gs: Vec<&Solution> = sols.iter().filter(|s| s.kind == Kind::GroundState).collect();
    let min_energy = gs.iter().map(|s| s.energy).fold(f64::INFINITY, f64::min);
    // ties within 1e-10 in energy are broken toward the hinted u0
    let near: Vec<&&Solution> =
        gs.iter().filter(|s| s.energy - min_energy <= 1e-10).collect();
    let pick = match (near.len(), u0_hint) {
        (0, _) => None,
        (1, _) | (_, None) => near.first().copied().copied(),
        (_, Some(hint)) => near
            .into_iter()
            .min_by(|a, b| {
                (a.u0 - hint).abs().partial_cmp(&(b.u0 - hint).abs()).unwrap()
            })
            .copied(),
    };
    Ok(pick.cloned())
}

/// Runs the full experiment: p_n = p_target ± 2^{-k} for k = 2..k_max.
pub fn run_convergence(
    p_target: f64,
    q: f64,
    n: u32,
    k_max: u32,
    side: Side,
    beta: f64,
) -> Result<ConvergenceReport> {
    if !(p_target > 1.0 && p_target < q) {
        return Err(Error::InvalidParams(format!("p_target = {p_target}, q = {q}")));
    }
    if k_max < 3 {
        return Err(Error::InvalidParams(format!("k_max = {k_max} < 3")));
    }
    let cfg = ShootConfig::default();
    let n_scan = 400;
    let target = ground_state(p_target, q, n, &cfg, n_scan, None)?.ok_or_else(|| {
        Error::InvalidParams(format!("no ground state at p_target = {p_target}"))
    })?;
    let energy_target = target.energy;

    let signs: &[f64] = match side {
        Side::Below => &[-1.0],
        Side::Above => &[1.0],
        Side::Both => &[-1.0, 1.0],
    };
    // (k, sign) jobs, solved concurrently
    let jobs: Vec<(u32, f64)> =
        (2..=k_max).flat_map(|k| signs.iter().map(move |&s| (k, s))).collect();
    let solved: Vec<(u32, f64, Result<Option<Solution>>)> = jobs
        .par_iter()
        .map(|&(k, sgn)| {
            let p_n = p_target + sgn * 2f64.powi(-(k as i32));
            (k, p_n, ground_state(p_n, q, n, &cfg, n_scan, Some(target.u0)))
        })
        .collect();

    let mut steps = Vec::new();
    let mut warnings = Vec::new();
    // profiles of the last two steps per side, for extrapolated limits
    let mut tail: [Vec<(u32, RadialProfile)>; 2] = [Vec::new(), Vec::new()];
    for (k, p_n, res) in solved {
        let sol = match res {
            Ok(Some(s)) => s,
            Ok(None) => {
                warnings.push(format!("k = {k}: no nonconstant ground state at p_n = {p_n}"));
                continue;
            }
            Err(e) => {
                warnings.push(format!("k = {k}: solve failed at p_n = {p_n}: {e}"));
                continue;
            }
        };
        let (w1p, holder, sup) =
            difference_norms(&sol.profile, &target.profile, p_target, beta)?;
        steps.push(ConvergenceStep {
            k,
            p_n,
            w1p_diff: w1p,
            holder_diff: holder,
            sup_diff: sup,
            energy_n: sol.energy,
            h_of_gs: nehari_h_at(&target.profile, p_n),
        });
        let si = if p_n < p_target { 0 } else { 1 };
        tail[si].push((k, sol.profile));
        if tail[si].len() > 2 {
            tail[si].remove(0);
        }
    }
    steps.sort_by(|a, b| {
        (b.p_n - p_target)
            .abs()
            .partial_cmp(&(a.p_n - p_target).abs())
            .unwrap()
            .then(a.p_n.partial_cmp(&b.p_n).unwrap())
    });

    let verdict = signs.iter().all(|&sgn| {
        let side_steps: Vec<&ConvergenceStep> = steps
            .iter()
            .filter(|s| (s.p_n < p_target) == (sgn < 0.0))
            .collect();
        verdict_for(&side_steps, energy_target)
    });

    let limit_gap = if side == Side::Both {
        Some(limit_gap(&tail[0], &tail[1])?)
    } else {
        None
    };

    Ok(ConvergenceReport {
        p_target,
        q,
        n,
        side,
        beta,
        steps,
        energy_target,
        verdict,
        warnings,
        limit_gap,
    })
}

/// Monotone decrease (one violation allowed per quantity) and final values
/// below tolerance. Steps must already be ordered by decreasing |p_n - p|.
fn verdict_for(steps: &[&ConvergenceStep], energy_target: f64) -> bool {
    if steps.is_empty() {
        return false;
    }
    let tracks: [(&dyn Fn(&ConvergenceStep) -> f64, f64); 5] = [
        (&|s| s.w1p_diff, TOL_W1P),
        (&|s| s.holder_diff, TOL_HOLDER),
        (&|s| s.sup_diff, TOL_SUP),
        (&|s| (s.energy_n - energy_target).abs(), TOL_ENERGY),
        (&|s| (s.h_of_gs - 1.0).abs(), TOL_NEHARI),
    ];
    tracks.iter().all(|(f, tol)| {
        let vals: Vec<f64> = steps.iter().map(|s| f(s)).collect();
        let violations = vals.windows(2).filter(|w| w[1] >= w[0]).count();
        violations <= 1 && *vals.last().unwrap() < *tol
    })
}

/// Sup distance between the one-sided limits, each extrapolated from its two
/// finest profiles: the leading error is linear in p_n - p, so 2·u_last -
/// u_prev cancels it.
fn limit_gap(below: &[(u32, RadialProfile)], above: &[(u32, RadialProfile)]) -> Result<f64> {
    let extrap = |pair: &[(u32, RadialProfile)]| -> Result<Vec<f64>> {
        match pair {
            [(_, prev), (_, last)] => {
                if !prev.same_grid(last) {
                    return Err(Error::GridMismatch);
                }
                Ok((0..last.len())
                    .map(|i| 2.0 * last.values[i] - prev.values[i])
                    .collect())
            }
            [(_, only)] => Ok(only.values.clone()),
            _ => Err(Error::InvalidParams("limit extrapolation needs steps on both sides".into())),
        }
    };
    let (lo, hi) = (extrap(below)?, extrap(above)?);
    Ok(lo.iter().zip(&hi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_ode;

    fn profile(p: f64, q: f64, d: f64) -> RadialProfile {
        let params = ProblemParams::new(p, q, 1).unwrap();
        radial_ode::integrate(&params, d, 1001, 1e-10).unwrap()
    }

    fn synthetic(pr: &ProblemParams, u: impl Fn(f64) -> f64, du: impl Fn(f64) -> f64) -> RadialProfile {
        let n = 101;
        let radii: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let values = radii.iter().map(|&r| u(r)).collect();
        let fluxes =
            radii.iter().map(|&r| radial_ode::sgn_pow(du(r), pr.p - 1.0)).collect();
        RadialProfile { radii, values, fluxes, params: *pr, moments: None }
    }

    #[test]
    fn zero_difference() {
        let a = profile(2.0, 30.0, 0.7);
        let (w, h, s) = difference_norms(&a, &a, 2.0, 0.5).unwrap();
        assert_eq!((w, h, s), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_difference() {
        let pr = ProblemParams::new(2.0, 30.0, 1).unwrap();
        let a = synthetic(&pr, |_| 1.3, |_| 0.0);
        let b = synthetic(&pr, |_| 1.0, |_| 0.0);
        let (w, h, s) = difference_norms(&a, &b, 2.0, 0.5).unwrap();
        assert!((s - 0.3).abs() < 1e-14);
        assert_eq!(h, 0.0);
        assert!((w - 0.3 * 2f64.sqrt()).abs() < 1e-12); // |c|·|B|^{1/p}, |B| = 2
    }

    #[test]
    fn linear_difference() {
        let pr = ProblemParams::new(2.0, 30.0, 1).unwrap();
        let a = synthetic(&pr, |r| r, |_| 1.0);
        let b = synthetic(&pr, |_| 0.0, |_| 0.0);
        let (w, h, s) = difference_norms(&a, &b, 2.0, 0.5).unwrap();
        assert!((s - 1.0).abs() < 1e-14);
        assert!((h - 1.0).abs() < 1e-12, "holder = {h}");
        assert!((w - (8.0 / 3.0f64).sqrt()).abs() < 1e-10, "w1p = {w}");
    }

    #[test]
    fn symmetry_and_triangle() {
        let a = profile(2.0, 30.0, 0.6);
        let b = profile(2.0, 30.0, 0.8);
        let c = profile(2.0, 30.0, 0.9);
        let ab = difference_norms(&a, &b, 2.0, 0.5).unwrap();
        let ba = difference_norms(&b, &a, 2.0, 0.5).unwrap();
        assert_eq!(ab, ba);
        let ac = difference_norms(&a, &c, 2.0, 0.5).unwrap();
        let cb = difference_norms(&c, &b, 2.0, 0.5).unwrap();
        assert!(ab.0 <= ac.0 + cb.0 + 1e-12);
        assert!(ab.1 <= ac.1 + cb.1 + 1e-12);
        assert!(ab.2 <= ac.2 + cb.2 + 1e-12);
    }

    #[test]
    fn holder_beta_one_limit_bounded_by_slope() {
        // near β = 1 on a Lipschitz difference the quotient approaches the
        // max slope
        let pr = ProblemParams::new(2.0, 30.0, 1).unwrap();
        let a = synthetic(&pr, |r| 0.5 * r, |_| 0.5);
        let b = synthetic(&pr, |_| 0.0, |_| 0.0);
        let (_, h, _) = difference_norms(&a, &b, 2.0, 0.999).unwrap();
        assert!(h <= 0.51, "holder = {h}");
    }

    #[test]
    fn grid_mismatch_rejected() {
        let params = ProblemParams::new(2.0, 30.0, 1).unwrap();
        let a = radial_ode::integrate(&params, 0.7, 1001, 1e-10).unwrap();
        let b = radial_ode::integrate(&params, 0.7, 501, 1e-10).unwrap();
        assert!(matches!(difference_norms(&a, &b, 2.0, 0.5), Err(Error::GridMismatch)));
    }

    #[test]
    fn bad_inputs_rejected() {
        let a = profile(2.0, 30.0, 0.7);
        assert!(difference_norms(&a, &a, 2.0, 1.0).is_err());
        assert!(run_convergence(2.0, 30.0, 1, 2, Side::Below, 0.5).is_err());
        assert!(run_convergence(0.5, 30.0, 1, 5, Side::Below, 0.5).is_err());
    }

    #[test]
    fn nehari_h_at_matches_solution_exponent() {
        let a = profile(2.0, 30.0, 0.7377694342);
        // at its own exponent the ground state is (numerically) on the
        // Nehari set, so h ≈ 1
        assert!((nehari_h_at(&a, 2.0) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn short_run_below_decreases() {
        let rep = run_convergence(2.0, 30.0, 1, 4, Side::Below, 0.5).unwrap();
        assert_eq!(rep.steps.len(), 3);
        assert!(rep.warnings.is_empty());
        for w in rep.steps.windows(2) {
            assert!(w[1].sup_diff < w[0].sup_diff);
            assert!(w[1].w1p_diff < w[0].w1p_diff);
        }
        assert!(rep.limit_gap.is_none());
    }

    #[test]
    fn steps_below_fold_become_warnings() {
        // p_n = 1.7 - 1/4 = 1.45 sits near the q = 60 lower fold where the
        // scan may or may not find the branch; deeper steps exist
        let rep = run_convergence(1.7, 60.0, 1, 4, Side::Above, 0.5).unwrap();
        assert!(!rep.steps.is_empty());
    }
}

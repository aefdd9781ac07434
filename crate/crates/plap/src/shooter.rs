//! Neumann boundary-value solver by shooting in d = u(0): scans the miss
//! function M(d) = w(1), brackets its zeros, refines them, and filters for
//! cone (radially nondecreasing) solutions.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::ProblemParams;
use crate::radial_ode::{self, RadialProfile};
use crate::rootfind::{brent, BrentOpts};
use crate::variational;

/// Sentinel magnitude for blown-up trajectories; above any physical |w(1)|.
const MISS_SENTINEL: f64 = 1e15;

#[derive(Debug, Clone, Copy)]
pub struct ShootConfig {
    pub tol_ode: f64,
    pub tol_bvp: f64,
    pub tol_mono: f64,
    pub n_out: usize,
    pub d_min: f64,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            tol_ode: radial_ode::TOL_ODE,
            tol_bvp: 1e-10,
            tol_mono: 1e-8,
            n_out: radial_ode::N_OUT,
            d_min: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Constant,
    GroundState,
    HigherEnergy,
    Unclassified,
}

/// A profile satisfying the Neumann shooting condition, with classification
/// metadata.
#[derive(Debug, Clone)]
pub struct Solution {
    pub profile: RadialProfile,
    pub u0: f64,
    pub miss_residual: f64,
    pub in_cone: bool,
    pub energy: f64,
    pub nehari_h: f64,
    pub kind: Kind,
}

impl Solution {
    pub fn is_constant(&self) -> bool {
        self.u0 == 1.0
    }
}

/// Full shooting diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Cone solutions plus the constant, sorted by u0.
    pub solutions: Vec<Solution>,
    /// Refined Neumann roots outside the cone (diagnostics only).
    pub non_cone: Vec<Solution>,
    /// Scan points where |miss| dips below sqrt(tol_bvp) without a sign
    /// change: near-tangent (fold-suspect) locations.
    pub fold_suspects: Vec<f64>,
}

/// Miss function M(d) = w(1). A blow-up escape maps to a signed sentinel so
/// the scan can still bracket across the escape region.
pub fn miss(params: &ProblemParams, d: f64, cfg: &ShootConfig) -> Result<f64> {
    match radial_ode::integrate_terminal(params, d, cfg.tol_ode) {
        Ok((_, w1)) => Ok(w1),
        Err(Error::Blowup { sign, .. }) => Ok(sign * MISS_SENTINEL),
        Err(e) => Err(e),
    }
}

/// Evaluates miss on a uniform grid over [d_lo, d_hi] and returns every
/// consecutive pair with a strict sign change.
pub fn scan_brackets(
    params: &ProblemParams,
    d_lo: f64,
    d_hi: f64,
    n_scan: usize,
    cfg: &ShootConfig,
) -> Result<Vec<(f64, f64)>> {
    Ok(scan(params, d_lo, d_hi, n_scan, cfg)?.brackets)
}

struct ScanResult {
    brackets: Vec<(f64, f64)>,
    suspects: Vec<f64>,
}

fn scan(
    params: &ProblemParams,
    d_lo: f64,
    d_hi: f64,
    n_scan: usize,
    cfg: &ShootConfig,
) -> Result<ScanResult> {
    assert!(n_scan >= 2 && d_hi > d_lo);
    let h = (d_hi - d_lo) / (n_scan - 1) as f64;
    let values: Vec<f64> = (0..n_scan)
        .into_par_iter()
        .map(|i| miss(params, d_lo + i as f64 * h, cfg))
        .collect::<Result<_>>()?;
    let mut brackets = Vec::new();
    let mut suspects = Vec::new();
    for i in 1..n_scan {
        let (f0, f1) = (values[i - 1], values[i]);
        if f0 != 0.0 && f1 != 0.0 && f0.signum() != f1.signum() {
            brackets.push((d_lo + (i - 1) as f64 * h, d_lo + i as f64 * h));
        }
    }
    // interior local minima of |miss| without a sign change
    for i in 1..n_scan.saturating_sub(1) {
        let (fm, f0, fp) = (values[i - 1].abs(), values[i].abs(), values[i + 1].abs());
        if f0 < fm
            && f0 < fp
            && f0 < cfg.tol_bvp.sqrt()
            && values[i - 1].signum() == values[i + 1].signum()
        {
            suspects.push(d_lo + i as f64 * h);
        }
    }
    Ok(ScanResult { brackets, suspects })
}

/// Refines one sign-change bracket of the miss function to |w(1)| ≤ tol_bvp
/// and builds the full Solution at the root.
pub fn refine_root(
    params: &ProblemParams,
    bracket: (f64, f64),
    cfg: &ShootConfig,
) -> Result<Solution> {
    let mut failure: Option<Error> = None;
    let f = |d: f64| match miss(params, d, cfg) {
        Ok(v) => v,
        Err(e) => {
            failure = Some(e);
            f64::NAN
        }
    };
    let opts = BrentOpts { xtol: 1e-15, ftol: cfg.tol_bvp, max_iter: 200, ..Default::default() };
    let root = brent(f, bracket.0, bracket.1, &opts)?;
    if failure.is_some() || root.is_nan() {
        return Err(Error::RefineFailed(bracket.0, bracket.1));
    }
    // a root indistinguishable from d = 1 is the constant solution
    let d = if (root - 1.0).abs() < 10.0 * cfg.tol_bvp { 1.0 } else { root };
    solution_at(params, d, cfg)
}

/// Builds the Solution (profile, residual, cone flag, energy, Nehari scalar)
/// for a given shooting value.
pub fn solution_at(params: &ProblemParams, d: f64, cfg: &ShootConfig) -> Result<Solution> {
    let profile = radial_ode::integrate(params, d, cfg.n_out, cfg.tol_ode)?;
    let miss_residual = profile.fluxes.last().unwrap().abs();
    // monotonicity is tested on the flux w = |u'|^{p-2}u' (same sign as u'):
    // for p > 2 the velocity map |w|^{1/(p-1)} would amplify flux roundoff
    // far above any fixed tolerance
    let min_flux = profile.fluxes.iter().copied().fold(f64::INFINITY, f64::min);
    let in_cone = min_flux >= -cfg.tol_mono;
    let rep = variational::energy(&profile)?;
    Ok(Solution {
        u0: d,
        miss_residual,
        in_cone,
        energy: rep.energy,
        nehari_h: rep.nehari_h,
        kind: if d == 1.0 { Kind::Constant } else { Kind::Unclassified },
        profile,
    })
}

/// Scans d ∈ (d_min, 1) and (1, s₀), refines every bracket, and returns the
/// cone solutions plus the constant, with diagnostics.
pub fn solve_report(
    params: &ProblemParams,
    n_scan: usize,
    cfg: &ShootConfig,
) -> Result<SolveReport> {
    let s0 = params.derived().s0;
    let below = scan(params, cfg.d_min, 1.0 - cfg.d_min, n_scan, cfg)?;
    let above = scan(params, 1.0 + cfg.d_min, s0 * (1.0 - 1e-12), n_scan, cfg)?;

    let mut roots: Vec<Solution> = below
        .brackets
        .par_iter()
        .chain(above.brackets.par_iter())
        .map(|&b| refine_root(params, b, cfg))
        .collect::<Result<_>>()?;
    // brackets that straddle the boundary of an escape region refine onto
    // the discontinuity, not onto a root; the residual exposes them
    roots.retain(|s| s.miss_residual <= cfg.tol_bvp.sqrt());
    roots.push(solution_at(params, 1.0, cfg)?);

    roots.sort_by(|a, b| a.u0.partial_cmp(&b.u0).unwrap());
    roots.dedup_by(|next, prev| (next.u0 - prev.u0).abs() < 10.0 * cfg.tol_bvp);

    let (solutions, non_cone): (Vec<_>, Vec<_>) =
        roots.into_iter().partition(|s| s.in_cone || s.is_constant());

    let mut fold_suspects = below.suspects;
    fold_suspects.extend(above.suspects);
    Ok(SolveReport { solutions, non_cone, fold_suspects })
}

/// Cone solutions plus the constant, sorted by u0.
pub fn solve_all(params: &ProblemParams, n_scan: usize) -> Result<Vec<Solution>> {
    Ok(solve_report(params, n_scan, &ShootConfig::default())?.solutions)
}

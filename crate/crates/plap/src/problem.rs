//! Problem parameters, derived constants and closed-form a-priori bounds.
//!
//! Everything downstream assumes a validated [`ProblemParams`]; all parameter
//! checking happens here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The exponent triple (p, q, N) of the radial Neumann problem
/// -div(|∇u|^{p-2}∇u) + u^{p-1} = u^{q-1} in the unit ball of R^N,
/// together with the measure constants of the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ProblemParams {
    pub p: f64,
    pub q: f64,
    pub n: u32,
    /// Surface measure of the unit sphere S^{N-1} (ω₀ = 2 for N = 1, so that
    /// integrals over the ball equal 2∫₀¹).
    pub omega: f64,
    /// Volume of the unit ball, ω / N.
    pub ball_volume: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    p: f64,
    q: f64,
    #[serde(rename = "N")]
    n: u32,
}

impl TryFrom<RawParams> for ProblemParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ProblemParams::new(r.p, r.q, r.n)
    }
}

impl From<ProblemParams> for RawParams {
    fn from(p: ProblemParams) -> Self {
        RawParams { p: p.p, q: p.q, n: p.n }
    }
}

/// Constants computed once from (p, q, N) and reused everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Truncation level s₀ = (q/p)^{1/(q-p)} + 1.
    pub s0: f64,
    /// Critical Sobolev exponent Np/(N-p), or +∞ when p ≥ N.
    pub m_star: f64,
    /// Sup bound for cone solutions, (q/p)^{1/(q-p)}.
    pub u_max: f64,
    /// Derivative bound for cone solutions, ((q-p)/(q(p-1)))^{1/p}.
    pub du_max: f64,
    /// Truncation exponent ℓ ∈ (p, m*) used above s₀.
    pub ell: f64,
}

impl ProblemParams {
    pub fn new(p: f64, q: f64, n: u32) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParams(format!("need p > 1, got p = {p}")));
        }
        if !(q > p) || !q.is_finite() {
            return Err(Error::InvalidParams(format!("need q > p, got q = {q}, p = {p}")));
        }
        if n < 1 {
            return Err(Error::InvalidParams("need N >= 1".into()));
        }
        let omega = sphere_surface(n);
        Ok(ProblemParams { p, q, n, omega, ball_volume: omega / n as f64 })
    }

    pub fn derived(&self) -> DerivedConstants {
        let (u_max, du_max) = apriori_bounds(self.p, self.q).expect("validated params");
        let m_star = sobolev_critical(self.p, self.n).expect("validated params");
        // Any ℓ in (p, m*) yields the same solutions below s₀; this fixed
        // choice makes the truncated nonlinearity reproducible bit-for-bit.
        let ell = if m_star.is_infinite() { self.p + 1.0 } else { 0.5 * (self.p + m_star) };
        DerivedConstants { s0: u_max + 1.0, m_star, u_max, du_max, ell }
    }
}

/// Surface measure of the unit sphere in R^N: 2 π^{N/2} / Γ(N/2).
fn sphere_surface(n: u32) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half_integer(n)
}

/// Γ(n/2) for integer n ≥ 1, by the recursion Γ(x+1) = xΓ(x) from
/// Γ(1/2) = √π and Γ(1) = 1.
fn gamma_half_integer(n: u32) -> f64 {
    let mut x = n as f64 / 2.0;
    let mut g = if n.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    while x > 1.0 {
        x -= 1.0;
        g *= x;
    }
    g
}

/// Critical Sobolev exponent: Np/(N-p) for p < N, +∞ otherwise.
pub fn sobolev_critical(p: f64, n: u32) -> Result<f64> {
    if !(p > 1.0) || n < 1 {
        return Err(Error::InvalidParams(format!("sobolev_critical: p = {p}, N = {n}")));
    }
    let nf = n as f64;
    Ok(if p < nf { nf * p / (nf - p) } else { f64::INFINITY })
}

/// Truncation level s₀ = (q/p)^{1/(q-p)} + 1.
pub fn s0(p: f64, q: f64) -> Result<f64> {
    let (u_max, _) = apriori_bounds(p, q)?;
    Ok(u_max + 1.0)
}

/// Closed-form a-priori bounds for cone solutions:
/// u ≤ (q/p)^{1/(q-p)} and u' ≤ ((q-p)/(q(p-1)))^{1/p}.
pub fn apriori_bounds(p: f64, q: f64) -> Result<(f64, f64)> {
    if !(p > 1.0) || !(q > p) {
        return Err(Error::InvalidParams(format!("apriori_bounds: p = {p}, q = {q}")));
    }
    let u_max = (q / p).powf(1.0 / (q - p));
    let du_max = ((q - p) / (q * (p - 1.0))).powf(1.0 / p);
    Ok((u_max, du_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sobolev_critical_examples() {
        assert!(sobolev_critical(2.0, 1).unwrap().is_infinite());
        assert!((sobolev_critical(2.0, 3).unwrap() - 6.0).abs() < 1e-14);
        assert!((sobolev_critical(1.5, 3).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn s0_examples() {
        assert!(s0(2.0, 2.0).is_err());
        // 1 + 15^{1/28}
        let v = s0(2.0, 30.0).unwrap();
        assert!((v - (1.0 + 15f64.powf(1.0 / 28.0))).abs() < 1e-15);
        assert!((v - 2.101548).abs() < 1e-5);
        let v = s0(1.5, 60.0).unwrap();
        assert!((v - (1.0 + 40f64.powf(1.0 / 58.5))).abs() < 1e-15);
        assert!((v - 2.065088).abs() < 1e-5);
    }

    #[test]
    fn apriori_bound_examples() {
        let (u, du) = apriori_bounds(2.0, 30.0).unwrap();
        assert!((u - 1.101548).abs() < 1e-5);
        assert!((du - (28f64 / 30.0).sqrt()).abs() < 1e-15);
        assert!((du - 0.966092).abs() < 1e-5);
        let (u, _) = apriori_bounds(3.0, 6.0).unwrap();
        assert!((u - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn ball_measures() {
        let p1 = ProblemParams::new(2.0, 30.0, 1).unwrap();
        assert_eq!(p1.omega, 2.0);
        assert_eq!(p1.ball_volume, 2.0);
        let p2 = ProblemParams::new(2.0, 30.0, 2).unwrap();
        assert!((p2.omega - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        let p3 = ProblemParams::new(2.0, 30.0, 3).unwrap();
        assert!((p3.omega - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((p3.ball_volume - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn u_max_monotone_in_q() {
        // u_max > 1 and u_max -> 1 monotonically as q grows at fixed p.
        let p = 1.7;
        let mut prev = f64::INFINITY;
        for q in [3.0, 5.0, 10.0, 30.0, 100.0, 1000.0] {
            let (u, _) = apriori_bounds(p, q).unwrap();
            assert!(u > 1.0);
            assert!(u < prev);
            prev = u;
        }
        assert!(prev < 1.01);
    }

    #[test]
    fn sobolev_monotone_below_n() {
        let mut prev = 0.0;
        for p in [1.1, 1.5, 2.0, 2.5, 2.9] {
            let v = sobolev_critical(p, 3).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(sobolev_critical(3.0, 3).unwrap().is_infinite());
    }

    #[test]
    fn params_json_roundtrip() {
        let p = ProblemParams::new(1.5, 60.0, 1).unwrap();
        let js = serde_json::to_string(&p).unwrap();
        assert_eq!(js, r#"{"p":1.5,"q":60.0,"N":1}"#);
        let back: ProblemParams = serde_json::from_str(&js).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<ProblemParams>(r#"{"p":2.0,"q":1.5,"N":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn s0_is_u_max_plus_one(p in 1.01f64..5.0, dq in 0.1f64..80.0) {
            let q = p + dq;
            let (u_max, du_max) = apriori_bounds(p, q).unwrap();
            prop_assert!(u_max.is_finite() && u_max > 0.0);
            prop_assert!(du_max.is_finite() && du_max > 0.0);
            prop_assert_eq!(s0(p, q).unwrap(), u_max + 1.0);
            prop_assert!(s0(p, q).unwrap() > 1.0);
        }

        #[test]
        fn ell_is_admissible(p in 1.01f64..5.0, dq in 0.1f64..80.0, n in 1u32..4) {
            let q = p + dq;
            let params = ProblemParams::new(p, q, n).unwrap();
            let d = params.derived();
            prop_assert!(d.ell > p && d.ell < d.m_star);
            prop_assert!(d.u_max < d.s0);
        }
    }
}

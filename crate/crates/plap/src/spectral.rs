//! Radial Neumann eigenvalues of the Laplacian in the unit ball, by linear
//! shooting: -(r^{N-1}φ')' = λ r^{N-1} φ with φ(0) = 1, φ'(0) = 0; an
//! eigenvalue is a λ with φ'(1) = 0. The first eigenvalue is zero (constant
//! eigenfunction), so indexing starts at k = 2.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ivp::{self, Guard, IvpOptions};
use crate::rootfind::{brent, scan_sign_changes, BrentOpts};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenResult {
    pub index: usize,
    pub lambda: f64,
    /// |φ'(1)| at the returned λ.
    pub residual: f64,
}

/// Terminal derivative φ'(1) of the radial eigenfunction candidate.
fn shoot(n: u32, lambda: f64, tol: f64) -> f64 {
    let nm1 = n as f64 - 1.0;
    let nf = n as f64;
    let rhs = move |r: f64, y: &[f64; 2]| {
        [y[1], -lambda * y[0] - if nm1 > 0.0 { nm1 * y[1] / r } else { 0.0 }]
    };
    let guard = |_: f64, _: &[f64; 2]| Guard::Continue;
    // series start: φ = 1 - λ r²/(2N), φ' = -λ r / N
    let r0 = 1e-8;
    let y0 = [1.0 - lambda * r0 * r0 / (2.0 * nf), -lambda * r0 / nf];
    let opts = IvpOptions { tol, ..Default::default() };
    let (_, y) = ivp::integrate(&rhs, &guard, r0, y0, 1.0, &[], &opts)
        .expect("linear eigenproblem cannot blow up");
    y[1]
}

/// The (k-1)-th positive radial Neumann eigenvalue, k ≥ 2.
pub fn radial_neumann_eigenvalue(n: u32, k: usize) -> Result<EigenResult> {
    if n < 1 || k < 2 {
        return Err(Error::InvalidParams(format!("eigenvalue: N = {n}, k = {k}")));
    }
    // the default window (0, 200] covers k up to 5 for N = 1; widen with k
    let hi = 200f64.max(12.0 * (k * k) as f64);
    // the terminal derivative oscillates uniformly in x = sqrt(λ) (zeros are
    // ~π apart in x), so scanning in x needs far fewer samples than in λ
    let samples = (12.0 * hi.sqrt()).ceil() as usize;
    // coarse scan with a loose tolerance, then tight refinement
    let brackets = scan_sign_changes(|x| shoot(n, x * x, 1e-8), 1e-3, hi.sqrt(), samples);
    if brackets.len() < k - 1 {
        return Err(Error::EigenNotFound { k, hi });
    }
    let (lo, hi_b) = (brackets[k - 2].0.powi(2), brackets[k - 2].1.powi(2));
    let tight = |lam: f64| shoot(n, lam, 1e-13);
    let opts = BrentOpts { xtol: 1e-13, rtol: 1e-14, ftol: 1e-11, max_iter: 200 };
    let lambda = brent(tight, lo, hi_b, &opts)?;
    let residual = tight(lambda).abs();
    Ok(EigenResult { index: k, lambda, residual })
}

/// The existence threshold 2 + λ₂ʳᵃᵈ for the semilinear case p = 2.
pub fn existence_threshold(n: u32) -> Result<f64> {
    Ok(2.0 + radial_neumann_eigenvalue(n, 2)?.lambda)
}

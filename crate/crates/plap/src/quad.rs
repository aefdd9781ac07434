//! Quadrature: composite Simpson on uniform grids and an adaptive Simpson
//! rule for the singular time-map integrals (after the graded substitution
//! the integrand is bounded but has limited smoothness at one endpoint).

/// Composite Simpson for samples on a uniform grid. Requires an odd number
/// of points; the grid produced by the integrator always is.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd number of points");
    let mut s4 = 0.0;
    let mut s2 = 0.0;
    for (i, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            s4 += v;
        } else {
            s2 += v;
        }
    }
    (values[0] + values[n - 1] + 4.0 * s4 + 2.0 * s2) * h / 3.0
}

/// Adaptive Simpson with absolute + relative tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(1e-300);
    rec(f, a, b, fa, fm, fb, whole, rel_tol * scale, 60)
}

#[allow(clippy::too_many_arguments)]
fn rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_exact() {
        // Simpson is exact on cubics.
        let n = 11;
        let h = 1.0 / (n - 1) as f64;
        let vals: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson_uniform(&vals, h) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_mild_kink() {
        // sqrt has unbounded derivatives at 0 but the integral converges fast.
        let v = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-10);
        assert!((v - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn adaptive_oscillatory() {
        let v = adaptive_simpson(&|x: f64| (10.0 * x).sin(), 0.0, 1.0, 1e-12);
        let exact = (1.0 - (10f64).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-11);
    }
}

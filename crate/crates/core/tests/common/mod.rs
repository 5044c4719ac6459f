//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `K(k) = int_0^{pi/2} (1 - k^2 sin^2)^{-1/2}`.
pub fn k_integral(k: f64) -> f64 {
    simpson(&|th: f64| 1.0 / (1.0 - (k * th.sin()).powi(2)).sqrt(), 0.0, 0.5 * PI, 1e-15)
}

/// `E(k) = int_0^{pi/2} (1 - k^2 sin^2)^{1/2}`.
pub fn e_integral(k: f64) -> f64 {
    simpson(&|th: f64| (1.0 - (k * th.sin()).powi(2)).sqrt(), 0.0, 0.5 * PI, 1e-15)
}

/// `L_n(zeta)` from the defining integral by adaptive Simpson; `p = 3` or `2`.
///
/// The integrand is split at `Theta = pi`, where `w` can vanish.
pub fn ln_integral(n: i64, zeta: f64, p: i32) -> f64 {
    let f = |th: f64| {
        let w = Complex64::new(1.0, 0.0) + Complex64::from_polar(zeta, -th);
        let g = w * w.norm().powi(p - 1);
        (g * Complex64::from_polar(1.0, -(n as f64) * th)).re
    };
    (simpson(&f, 0.0, PI, 1e-14) + simpson(&f, PI, 2.0 * PI, 1e-14)) / (2.0 * PI)
}

/// Central second-order difference.
pub fn d1<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central second difference.
pub fn d2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Fourth-order central first derivative.
pub fn d1_4<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second derivative.
pub fn d2_4<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

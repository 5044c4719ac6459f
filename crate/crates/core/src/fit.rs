//! Least-squares line fits used by the decay diagnostics.

use crate::error::{Error, Result};

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} abscissae vs {} ordinates", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let spread = xs.iter().map(|x| (x - mx).abs()).fold(0.0, f64::max);
    if !(sxx > 0.0) || spread < 1e-12 * mx.abs().max(1.0) {
        return Err(Error::Fit("abscissae are degenerate".into()));
    }
    if !xs.iter().chain(ys).all(|v| v.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Fits `norm = C t^{-p} (log t)^q` with `q` held fixed; returns `(C, p)`.
pub fn power_log_fit(ts: &[f64], norms: &[f64], q: f64) -> Result<(f64, f64)> {
    if norms.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Fit("norms must be positive".into()));
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = ts
        .iter()
        .zip(norms)
        .map(|(t, r)| r.ln() - q * t.ln().ln())
        .collect();
    let (slope, intercept) = linear_fit(&xs, &ys)?;
    Ok((intercept.exp(), -slope))
}

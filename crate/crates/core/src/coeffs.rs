//! Fourier coefficients `L_n(zeta)` of the gauge-invariant nonlinearity
//! evaluated on the two-wave superposition `1 + zeta e^{-i Theta}`.
//!
//! `L_n(zeta) = (1/2pi) int_0^{2pi} |w|^{p-1} w e^{-i n Theta} dTheta` with
//! `w = 1 + zeta e^{-i Theta}`, `p = 2` for the quadratic (2D) nonlinearity and
//! `p = 3` for the cubic (1D) one. All tables are free of the coupling `lambda`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::elliptic::{ellip_e, ellip_ke, k_of_zeta};
use crate::error::{Error, Result};

const QUAD_TOL: f64 = 1e-12;
const QUAD_MIN_NODES: usize = 64;
const QUAD_MAX_NODES: usize = 1 << 20;
/// Closed forms of `L_0` hand over to quadrature inside this band around 1.
pub const L0_BAND: f64 = 1e-4;
/// Coefficients below this are treated as roundoff in decay fits.
pub const DECAY_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Dim {
    pub fn from_int(d: u32) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            _ => Err(Error::Config(format!("dimension must be 1 or 2, got {d}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }

    /// Power of `zeta` in the reflection identity.
    pub fn reflection_power(self) -> i32 {
        match self {
            Dim::One => 3,
            Dim::Two => 2,
        }
    }

    fn integrand(self, w: Complex64) -> Complex64 {
        match self {
            Dim::One => w * w.norm_sqr(),
            Dim::Two => w * w.norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    ClosedForm,
    ClosedFormLimit,
    Symbolic,
    FiniteDifference,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::ClosedForm => "closed_form",
            Method::ClosedFormLimit => "closed_form_limit",
            Method::Symbolic => "symbolic",
            Method::FiniteDifference => "finite_difference",
        }
    }
}

/// Quadrature result: real part, size of the discarded imaginary part, node count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub im_residue: f64,
    pub nodes: usize,
}

fn check_zeta(zeta: f64) -> Result<()> {
    if zeta > 0.0 && zeta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("ratio {zeta} must be positive and finite")))
    }
}

fn node(dim: Dim, zeta: f64, j: usize, n_nodes: usize) -> Complex64 {
    let theta = 2.0 * PI * j as f64 / n_nodes as f64;
    dim.integrand(Complex64::new(1.0, 0.0) + Complex64::from_polar(zeta, -theta))
}

/// Trapezoid rule for a single `L_n` with node doubling.
pub fn ln_quadrature(n: i64, zeta: f64, dim: Dim) -> Result<Quad> {
    check_zeta(zeta)?;
    let term = |j: usize, nodes: usize| {
        let theta = 2.0 * PI * j as f64 / nodes as f64;
        node(dim, zeta, j, nodes) * Complex64::from_polar(1.0, -(n as f64) * theta)
    };
    let mut nodes = QUAD_MIN_NODES;
    let mut sum: Complex64 = (0..nodes).map(|j| term(j, nodes)).sum();
    let mut prev = sum / nodes as f64;
    while nodes < QUAD_MAX_NODES {
        let fine = 2 * nodes;
        let odd: Complex64 = (0..nodes).map(|j| term(2 * j + 1, fine)).sum();
        sum += odd;
        nodes = fine;
        let cur = sum / nodes as f64;
        if (cur - prev).norm() <= QUAD_TOL {
            return Ok(Quad { value: cur.re, im_residue: cur.im.abs(), nodes });
        }
        prev = cur;
    }
    Err(Error::Accuracy(format!(
        "L_{n}({zeta}) did not converge with {QUAD_MAX_NODES} nodes"
    )))
}

/// Trapezoid values of `L_n` for every `n` in `n_min..=n_max` at a fixed node count.
pub fn ln_table_fixed(zeta: f64, dim: Dim, n_min: i64, n_max: i64, nodes: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..nodes).map(|j| node(dim, zeta, j, nodes)).collect();
    FftPlanner::new().plan_fft_forward(nodes).process(&mut buf);
    let scale = 1.0 / nodes as f64;
    (n_min..=n_max)
        .map(|n| buf[n.rem_euclid(nodes as i64) as usize] * scale)
        .collect()
}

/// All of `L_{n_min..=n_max}` at once, doubling the FFT size until every entry settles.
pub fn ln_table_quadrature(zeta: f64, dim: Dim, n_min: i64, n_max: i64) -> Result<(Vec<Quad>, usize)> {
    check_zeta(zeta)?;
    if n_min > n_max {
        return Err(Error::Shape(format!("empty index range {n_min}..={n_max}")));
    }
    let span = n_min.unsigned_abs().max(n_max.unsigned_abs()) as usize;
    let mut nodes = QUAD_MIN_NODES.max((4 * span + 4).next_power_of_two());
    let mut prev = ln_table_fixed(zeta, dim, n_min, n_max, nodes);
    while nodes < QUAD_MAX_NODES {
        nodes *= 2;
        let cur = ln_table_fixed(zeta, dim, n_min, n_max, nodes);
        let diff = cur.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if diff <= QUAD_TOL {
            let out = cur
                .iter()
                .map(|c| Quad { value: c.re, im_residue: c.im.abs(), nodes })
                .collect();
            return Ok((out, nodes));
        }
        prev = cur;
    }
    Err(Error::Accuracy(format!(
        "coefficient table at zeta = {zeta} did not converge with {QUAD_MAX_NODES} nodes"
    )))
}

/// Exact coefficients of `|w|^2 w`.
pub fn cubic_coeff(n: i64, zeta: f64) -> f64 {
    match n {
        -2 => zeta * zeta,
        -1 => zeta * zeta * zeta + 2.0 * zeta,
        0 => 1.0 + 2.0 * zeta * zeta,
        1 => zeta,
        _ => 0.0,
    }
}

/// `d^order/dzeta^order` of [`cubic_coeff`].
pub fn cubic_coeff_deriv(n: i64, zeta: f64, order: u32) -> f64 {
    match (order, n) {
        (0, _) => cubic_coeff(n, zeta),
        (1, -2) => 2.0 * zeta,
        (1, -1) => 3.0 * zeta * zeta + 2.0,
        (1, 0) => 4.0 * zeta,
        (1, 1) => 1.0,
        (2, -2) => 2.0,
        (2, -1) => 6.0 * zeta,
        (2, 0) => 4.0,
        _ => 0.0,
    }
}

/// `L_0` of the quadratic nonlinearity, tagged with the branch used.
pub fn l0_closed_tagged(zeta: f64) -> Result<(f64, Method)> {
    check_zeta(zeta)?;
    if zeta == 1.0 {
        // (1 - zeta)^2 K -> 0 and E(1) = 1
        return Ok((16.0 / (3.0 * PI), Method::ClosedFormLimit));
    }
    if (zeta - 1.0).abs() < L0_BAND {
        return Ok((ln_quadrature(0, zeta, Dim::Two)?.value, Method::Quadrature));
    }
    Ok((l0_elliptic(zeta)?, Method::ClosedForm))
}

pub fn l0_closed(zeta: f64) -> Result<f64> {
    l0_closed_tagged(zeta).map(|(v, _)| v)
}

fn l0_elliptic(zeta: f64) -> Result<f64> {
    if zeta > 4.0 {
        // the two elliptic terms cancel to O(zeta^-2); the periodic trapezoid
        // rule converges like zeta^-N here instead. With r = |1 + e^{i th} / zeta|
        // the integrand is zeta r + c (2 zeta c + 1) / (r + 1) + zeta^2 c, and the
        // last term has zero mean.
        const N: usize = 64;
        let s = 1.0 / zeta;
        let sum: f64 = (0..N)
            .map(|j| {
                let c = (2.0 * PI * j as f64 / N as f64).cos();
                let r = (1.0 + s * (2.0 * c + s)).sqrt();
                zeta * r + c * (2.0 * zeta * c + 1.0) / (r + 1.0)
            })
            .sum();
        return Ok(sum / N as f64);
    }
    let (k, e) = ellip_ke(k_of_zeta(zeta)?)?;
    let d = 1.0 - zeta;
    Ok((1.0 + zeta) * (7.0 + zeta * zeta) / (3.0 * PI) * e - (1.0 + zeta) * d * d / (3.0 * PI) * k)
}

/// First or second derivative of `L_0` from the elliptic closed forms.
///
/// The complementary modulus is built exactly from `zeta`, so the forms stay
/// accurate arbitrarily close to `zeta = 1`, where the limits `4/pi` and `2/pi` apply.
pub fn l0_deriv(zeta: f64, order: u32) -> Result<f64> {
    check_zeta(zeta)?;
    if zeta == 1.0 {
        return match order {
            1 => Ok(4.0 / PI),
            2 => Ok(2.0 / PI),
            _ => Err(Error::Domain(format!("derivative order {order} not in 1..=2"))),
        };
    }
    let m = k_of_zeta(zeta)?;
    let (k, e) = ellip_ke(m)?;
    let (zp, zm) = (zeta + 1.0, zeta - 1.0);
    match order {
        1 => Ok(zp * (zeta * zeta + 1.0) / (PI * zeta) * e - zp * zm * zm / (PI * zeta) * k),
        2 => {
            let z2 = zeta * zeta;
            Ok(zp * (2.0 * z2 - 1.0) / (PI * z2) * e - zm * (2.0 * z2 + 1.0) / (PI * z2) * k)
        }
        _ => Err(Error::Domain(format!("derivative order {order} not in 1..=2"))),
    }
}

/// Derivatives of `L_0` by differentiating under the integral sign.
///
/// Converges algebraically when `zeta` is close to 1; kept as a cross-check.
pub fn l0_deriv_quadrature(zeta: f64, order: u32) -> Result<Quad> {
    check_zeta(zeta)?;
    if !(1..=2).contains(&order) {
        return Err(Error::Domain(format!("derivative order {order} not in 1..=2")));
    }
    let f = |theta: f64| -> Complex64 {
        let e = Complex64::from_polar(1.0, -theta);
        let w = Complex64::new(1.0, 0.0) + e * zeta;
        let r = w.norm();
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let dr = (zeta + theta.cos()) / r;
        if order == 1 {
            dr * w + r * e
        } else {
            let s = theta.sin();
            s * s / (r * r * r) * w + 2.0 * dr * e
        }
    };
    let mut nodes = QUAD_MIN_NODES;
    let mut sum: Complex64 = (0..nodes).map(|j| f(2.0 * PI * j as f64 / nodes as f64)).sum();
    let mut prev = sum / nodes as f64;
    while nodes < QUAD_MAX_NODES {
        let fine = 2 * nodes;
        sum += (0..nodes)
            .map(|j| f(2.0 * PI * (2 * j + 1) as f64 / fine as f64))
            .sum::<Complex64>();
        nodes = fine;
        let cur = sum / nodes as f64;
        if (cur - prev).norm() <= QUAD_TOL {
            return Ok(Quad { value: cur.re, im_residue: cur.im.abs(), nodes });
        }
        prev = cur;
    }
    let cur = sum / nodes as f64;
    if (cur - prev).norm() <= 1e-7 {
        // the integrand of the second derivative jumps at zeta = 1
        return Ok(Quad { value: cur.re, im_residue: cur.im.abs(), nodes });
    }
    Err(Error::Accuracy(format!("L_0^({order})({zeta}) quadrature did not converge")))
}

/// Central difference of `L_0''` at `1 + h` with step `h/10`.
pub fn l0_third_deriv_probe(h: f64) -> Result<f64> {
    if !(1e-10..=1e-2).contains(&h) {
        return Err(Error::Domain(format!("probe step {h} outside [1e-10, 1e-2]")));
    }
    let z = 1.0 + h;
    let d = 0.1 * h;
    Ok(((l0_deriv(z + d, 2)? - l0_deriv(z - d, 2)?) / (2.0 * d)).abs())
}

/// `|zeta^{-p} L_{-n}(zeta) - L_{n-1}(1/zeta)|`, both sides by quadrature.
pub fn reflection_residual(n: i64, zeta: f64, dim: Dim) -> Result<f64> {
    let lhs = ln_quadrature(-n, zeta, dim)?.value * zeta.powi(-dim.reflection_power());
    let rhs = ln_quadrature(n - 1, 1.0 / zeta, dim)?.value;
    Ok((lhs - rhs).abs())
}

/// Outcome of a log-log decay fit of `|L_n|` against `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub points_used: usize,
    /// Every coefficient fell below [`DECAY_FLOOR`]: decay faster than any power.
    pub underflow: bool,
    /// `min_n n^3 |L_n|` over the fitted points.
    pub cubic_lower_constant: f64,
}

/// Least-squares slope of `log|L_n(zeta)|` against `log n` for `n` in `[4, n_max]`.
pub fn decay_fit(zeta: f64, n_max: i64) -> Result<DecayFit> {
    if n_max < 16 {
        return Err(Error::Domain(format!("decay fit needs n_max >= 16, got {n_max}")));
    }
    let (table, _) = ln_table_quadrature(zeta, Dim::Two, 4, n_max)?;
    let pts: Vec<(f64, f64)> = (4..=n_max)
        .zip(&table)
        .filter(|(_, q)| q.value.abs() >= DECAY_FLOOR)
        .map(|(n, q)| ((n as f64).ln(), q.value.abs().ln()))
        .collect();
    let cubic_lower_constant = (4..=n_max)
        .zip(&table)
        .map(|(n, q)| ((1 + n * n) as f64).powf(1.5) * q.value.abs())
        .fold(f64::INFINITY, f64::min);
    if pts.len() < 2 {
        return Ok(DecayFit {
            slope: f64::NEG_INFINITY,
            intercept: f64::NAN,
            points_used: pts.len(),
            underflow: true,
            cubic_lower_constant,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let (slope, intercept) = crate::fit::linear_fit(&xs, &ys)?;
    Ok(DecayFit { slope, intercept, points_used: pts.len(), underflow: false, cubic_lower_constant })
}

/// `d^order L_n / dzeta^order` for every `n` in the range, at a fixed node count.
///
/// `n = 0` uses the closed forms; the rest use central differences with step
/// `1e-5 max(1, zeta)` of trapezoid tables sharing one node count.
pub fn ln_deriv_table(zeta: f64, n_min: i64, n_max: i64, order: u32) -> Result<Vec<(f64, Method)>> {
    check_zeta(zeta)?;
    let (base, nodes) = ln_table_quadrature(zeta, Dim::Two, n_min, n_max)?;
    if order == 0 {
        return Ok(base.iter().map(|q| (q.value, Method::Quadrature)).collect());
    }
    if order > 2 {
        return Err(Error::Domain(format!("derivative order {order} not in 0..=2")));
    }
    let h = 1e-5 * zeta.max(1.0);
    let nodes = nodes.max(1 << 13);
    let plus = ln_table_fixed(zeta + h, Dim::Two, n_min, n_max, nodes);
    let minus = ln_table_fixed(zeta - h, Dim::Two, n_min, n_max, nodes);
    let mid = ln_table_fixed(zeta, Dim::Two, n_min, n_max, nodes);
    (n_min..=n_max)
        .enumerate()
        .map(|(i, n)| {
            if n == 0 {
                return Ok((l0_deriv(zeta, order)?, Method::ClosedForm));
            }
            let v = if order == 1 {
                (plus[i].re - minus[i].re) / (2.0 * h)
            } else {
                (plus[i].re - 2.0 * mid[i].re + minus[i].re) / (h * h)
            };
            Ok((v, Method::FiniteDifference))
        })
        .collect()
}

/// Sup of `<n>^{3-k} |L_n^{(k)}(zeta)|` for each `k` in `0..=2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBound {
    pub rho0: f64,
    pub n_max: i64,
    pub zeta_points: usize,
    pub max_by_order: [f64; 3],
}

/// Geometric grid on `[1/rho0, rho0]` with the band `|zeta - 1| < 1e-3` removed.
pub fn bound_zeta_grid(rho0: f64, per_side: usize) -> Vec<f64> {
    let gap = 1e-3;
    let mut out = Vec::with_capacity(2 * per_side);
    let side = |lo: f64, hi: f64, out: &mut Vec<f64>| {
        for i in 0..per_side {
            let s = if per_side == 1 { 0.0 } else { i as f64 / (per_side - 1) as f64 };
            out.push(lo * (hi / lo).powf(s));
        }
    };
    side(1.0 / rho0, 1.0 - gap, &mut out);
    side(1.0 + gap, rho0, &mut out);
    out
}

pub fn uniform_bound_check(rho0: f64, n_max: i64, per_side: usize) -> Result<UniformBound> {
    if !(rho0 > 1.0 && rho0 <= 10.0) {
        return Err(Error::Domain(format!("rho0 = {rho0} outside (1, 10]")));
    }
    let grid = bound_zeta_grid(rho0, per_side);
    let per_zeta: Vec<[f64; 3]> = grid
        .par_iter()
        .map(|&z| {
            let mut best = [0.0_f64; 3];
            for (k, slot) in best.iter_mut().enumerate() {
                let table = ln_deriv_table(z, -n_max, n_max, k as u32)?;
                for (n, (v, _)) in (-n_max..=n_max).zip(table) {
                    let weight = ((1 + n * n) as f64).powf(0.5 * (3.0 - k as f64));
                    *slot = slot.max(weight * v.abs());
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut max_by_order = [0.0_f64; 3];
    for b in per_zeta {
        for k in 0..3 {
            max_by_order[k] = max_by_order[k].max(b[k]);
        }
    }
    Ok(UniformBound { rho0, n_max, zeta_points: grid.len(), max_by_order })
}

/// `L_0(zeta) - zeta L_0(1/zeta)`; has the sign of `zeta - 1`.
pub fn complexness_discriminant(zeta: f64) -> Result<f64> {
    check_zeta(zeta)?;
    if zeta == 1.0 {
        return Ok(0.0);
    }
    Ok(l0_closed(zeta)? - zeta * l0_closed(1.0 / zeta)?)
}

/// A range of coefficients (or their derivatives) at one ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffTable {
    pub dimension: u32,
    pub zeta: f64,
    pub n_min: i64,
    pub n_max: i64,
    pub derivative_order: u32,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
    pub im_residues: Vec<f64>,
}

impl CoeffTable {
    pub fn get(&self, n: i64) -> Option<f64> {
        (self.n_min..=self.n_max).contains(&n).then(|| self.values[(n - self.n_min) as usize])
    }
}

/// Builds a table with the production method for each entry.
///
/// `prefer_quadrature` forces trapezoid values even where an exact form exists.
pub fn coeff_table(
    dim: Dim,
    zeta: f64,
    n_min: i64,
    n_max: i64,
    order: u32,
    prefer_quadrature: bool,
) -> Result<CoeffTable> {
    check_zeta(zeta)?;
    if n_min > n_max {
        return Err(Error::Shape(format!("empty index range {n_min}..={n_max}")));
    }
    if order > 2 {
        return Err(Error::Domain(format!("derivative order {order} not in 0..=2")));
    }
    let len = (n_max - n_min + 1) as usize;
    let (values, methods, im_residues) = match (dim, order, prefer_quadrature) {
        (Dim::One, _, false) | (Dim::One, 1.., true) => (
            (n_min..=n_max).map(|n| cubic_coeff_deriv(n, zeta, order)).collect(),
            vec![Method::Symbolic; len],
            vec![0.0; len],
        ),
        (_, 0, true) | (Dim::Two, 0, false) => {
            let (q, _) = ln_table_quadrature(zeta, dim, n_min, n_max)?;
            let mut values: Vec<f64> = q.iter().map(|x| x.value).collect();
            let mut methods = vec![Method::Quadrature; len];
            if dim == Dim::Two && !prefer_quadrature && (n_min..=n_max).contains(&0) {
                let (v, m) = l0_closed_tagged(zeta)?;
                values[(-n_min) as usize] = v;
                methods[(-n_min) as usize] = m;
            }
            (values, methods, q.iter().map(|x| x.im_residue).collect())
        }
        (Dim::Two, _, _) => {
            let d = ln_deriv_table(zeta, n_min, n_max, order)?;
            (d.iter().map(|x| x.0).collect(), d.iter().map(|x| x.1).collect(), vec![0.0; len])
        }
    };
    Ok(CoeffTable { dimension: dim.as_int(), zeta, n_min, n_max, derivative_order: order, values, methods, im_residues })
}

/// `L_0` of the quadratic nonlinearity, closed form away from 1.
///
/// Used for bulk evaluation on profile grids.
pub fn l0_fast(zeta: f64) -> Result<f64> {
    check_zeta(zeta)?;
    if zeta == 1.0 {
        return Ok(16.0 / (3.0 * PI));
    }
    l0_elliptic(zeta)
}

/// `E(k(zeta))` for diagnostics.
pub fn e_of_zeta(zeta: f64) -> Result<f64> {
    Ok(ellip_e(k_of_zeta(zeta)?))
}

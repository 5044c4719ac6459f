//! Complete elliptic integrals of the first and second kind.
//!
//! Both integrals are evaluated with the arithmetic-geometric mean. A
//! [`Modulus`] carries the complementary modulus `k' = sqrt(1 - k^2)` next to
//! `k`, so moduli produced from an amplitude ratio close to one keep full
//! relative accuracy in `k'` and `K(k)` stays finite and accurate right up to
//! the singular point.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const AGM_TOL: f64 = 1e-15;
const AGM_MAX_ITER: usize = 64;

/// Modulus `k` in `[0, 1]` together with its complement `k'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    k: f64,
    kc: f64,
}

impl Modulus {
    pub fn new(k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::Domain(format!("modulus {k} outside [0, 1]")));
        }
        let kc = ((1.0 - k) * (1.0 + k)).sqrt();
        Ok(Self { k, kc })
    }

    /// The modulus `2 sqrt(zeta) / (1 + zeta)`, with `k' = |1 - zeta| / (1 + zeta)`.
    pub fn from_zeta(zeta: f64) -> Result<Self> {
        if !(zeta > 0.0) || !zeta.is_finite() {
            return Err(Error::Domain(format!("ratio {zeta} must be positive and finite")));
        }
        let k = (2.0 * zeta.sqrt() / (1.0 + zeta)).min(1.0);
        let kc = (1.0 - zeta).abs() / (1.0 + zeta);
        Ok(Self { k, kc })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn complement(&self) -> f64 {
        self.kc
    }

    pub fn is_singular(&self) -> bool {
        self.kc == 0.0
    }
}

/// `2 sqrt(zeta) / (1 + zeta)`; symmetric under `zeta -> 1/zeta`.
pub fn k_of_zeta(zeta: f64) -> Result<Modulus> {
    Modulus::from_zeta(zeta)
}

/// Runs the AGM of `(1, k')`, returning the mean and `sum 2^(n-1) c_n^2`.
fn agm(m: Modulus) -> (f64, f64) {
    let mut a = 1.0_f64;
    let mut b = m.kc;
    let mut c = m.k;
    let mut weight = 0.5;
    let mut sum = weight * c * c;
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_TOL * a {
            break;
        }
        let a_next = 0.5 * (a + b);
        c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = a_next;
        weight *= 2.0;
        sum += weight * c * c;
    }
    (a, sum)
}

/// `K(k) = int_0^{pi/2} (1 - k^2 sin^2 t)^{-1/2} dt`.
pub fn ellip_k(m: Modulus) -> Result<f64> {
    if m.is_singular() {
        return Err(Error::Divergence("K(k) is infinite at k = 1".into()));
    }
    let (a, _) = agm(m);
    Ok(PI / (2.0 * a))
}

/// `E(k) = int_0^{pi/2} (1 - k^2 sin^2 t)^{1/2} dt`; `E(1) = 1`.
pub fn ellip_e(m: Modulus) -> f64 {
    if m.is_singular() {
        return 1.0;
    }
    let (a, sum) = agm(m);
    PI / (2.0 * a) * (1.0 - sum)
}

/// Both integrals from a single AGM run.
pub fn ellip_ke(m: Modulus) -> Result<(f64, f64)> {
    if m.is_singular() {
        return Err(Error::Divergence("K(k) is infinite at k = 1".into()));
    }
    let (a, sum) = agm(m);
    let k = PI / (2.0 * a);
    Ok((k, k * (1.0 - sum)))
}

/// Two-sided bracket for `K(k) / |log(1 - k)|` near the logarithmic singularity.
///
/// Uses `U(k) = int_0^1 ((1 - t)(1 - kt))^{-1/2} dt = (2/sqrt k) asinh(sqrt(k/(1-k)))`:
/// `(1+t)(1+kt) <= 4` gives `K >= U/2` and `(1+t)(1+kt) >= 1` gives `K <= U`.
pub fn log_singularity_bracket(m: Modulus) -> Result<(f64, f64)> {
    let k = m.k;
    if !(k > 0.9 && k < 1.0) {
        return Err(Error::Domain(format!("bracket needs 0.9 < k < 1, got {k}")));
    }
    let one_minus_k = m.kc * m.kc / (1.0 + k);
    let upper = 2.0 / k.sqrt() * (k / one_minus_k).sqrt().asinh();
    let log = one_minus_k.ln().abs();
    Ok((0.5 * upper / log, upper / log))
}

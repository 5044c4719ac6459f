//! Periodic pseudo-spectral evolution of the 1D equation
//! `(d_t^2 - d_x^2 + 1) u = lambda |u|^2 u`, and the final-value experiment
//! that seeds it from a profile.
//!
//! The state is carried as the half-wave variables
//! `phi_pm = (u +- i <D>^{-1} u_t) / 2`, which obey
//! `d_t phi_pm = -+ i <D> phi_pm +- (i/2) <D>^{-1} N(u)`.
//! A Strang step is an exact linear half step, an exact nonlinear kick (the
//! kick leaves `u` unchanged) and another linear half step.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::coeffs::Dim;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hyperbolic::{residual_norm, Variant};
use crate::profiles::{Kind, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Domain is `[-L, L)`.
    pub half_width: f64,
    pub grid_points: usize,
    pub dt: f64,
    pub lambda: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub dealias: bool,
    /// Spacing of recorded snapshots.
    pub snapshot_every: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            half_width: 300.0,
            grid_points: 4096,
            dt: 0.05,
            lambda: 1.0,
            t_start: 50.0,
            t_end: 200.0,
            dealias: true,
            snapshot_every: 5.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.grid_points.is_power_of_two() || self.grid_points < 8 {
            return Err(Error::Config(format!("N = {} must be a power of two >= 8", self.grid_points)));
        }
        if !(self.t_end > self.t_start) {
            return Err(Error::Config("T_end must exceed T".into()));
        }
        if !(self.half_width > self.t_end) {
            return Err(Error::Config(format!("L = {} must exceed T_end = {}", self.half_width, self.t_end)));
        }
        let dx = 2.0 * self.half_width / self.grid_points as f64;
        if !(self.dt > 0.0 && self.dt <= 0.5 * dx) {
            return Err(Error::Config(format!("dt = {} must lie in (0, {}]", self.dt, 0.5 * dx)));
        }
        if !(self.snapshot_every > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config("snapshot spacing must be positive and lambda finite".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(Dim::One, self.grid_points, self.half_width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub t: f64,
    pub u: Vec<Complex64>,
    pub ut: Vec<Complex64>,
}

/// FFT plans and Fourier multipliers for one periodic grid.
#[derive(Clone)]
pub struct Spectral {
    pub grid: Grid,
    /// `<xi>` per FFT bin.
    jxi: Vec<f64>,
    /// Bins kept by the 2/3 rule.
    keep: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.dim != Dim::One {
            return Err(Error::Capability("time evolution is one-dimensional only".into()));
        }
        let n = grid.n;
        let xi = grid.wavenumbers();
        let k_max = std::f64::consts::PI / grid.dz();
        let jxi = xi.iter().map(|k| (1.0 + k * k).sqrt()).collect();
        let keep = (0..n).map(|k| k != n / 2 && xi[k].abs() <= 2.0 / 3.0 * k_max).collect();
        let mut planner = FftPlanner::new();
        Ok(Self { grid, jxi, keep, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) })
    }

    fn forward(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = v.to_vec();
        self.fwd.process(&mut buf);
        buf
    }

    fn inverse(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = v.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / self.grid.n as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    fn wavenumber(&self, k: usize) -> f64 {
        let n = self.grid.n as isize;
        let k = k as isize;
        let q = if k < n / 2 { k } else { k - n };
        std::f64::consts::PI / self.grid.half_width * q as f64
    }
}

/// Half-wave variables `(phi_+, phi_-)` in physical space.
pub fn half_kg_variables(sp: &Spectral, state: &EvolutionState) -> (Vec<Complex64>, Vec<Complex64>) {
    let (p, m) = to_hat(sp, state);
    (sp.inverse(&p), sp.inverse(&m))
}

/// Inverse of [`half_kg_variables`].
pub fn from_half_kg(sp: &Spectral, t: f64, phi_p: &[Complex64], phi_m: &[Complex64]) -> EvolutionState {
    from_hat(sp, t, &sp.forward(phi_p), &sp.forward(phi_m))
}

fn to_hat(sp: &Spectral, state: &EvolutionState) -> (Vec<Complex64>, Vec<Complex64>) {
    let u = sp.forward(&state.u);
    let ut = sp.forward(&state.ut);
    let i = Complex64::i();
    let p = (0..u.len()).map(|k| 0.5 * (u[k] + i * ut[k] / sp.jxi[k])).collect();
    let m = (0..u.len()).map(|k| 0.5 * (u[k] - i * ut[k] / sp.jxi[k])).collect();
    (p, m)
}

fn from_hat(sp: &Spectral, t: f64, p: &[Complex64], m: &[Complex64]) -> EvolutionState {
    let i = Complex64::i();
    let u: Vec<Complex64> = p.iter().zip(m).map(|(a, b)| a + b).collect();
    let ut: Vec<Complex64> = (0..p.len()).map(|k| -i * sp.jxi[k] * (p[k] - m[k])).collect();
    EvolutionState { t, u: sp.inverse(&u), ut: sp.inverse(&ut) }
}

fn rotate(sp: &Spectral, p: &mut [Complex64], m: &mut [Complex64], dt: f64) {
    for k in 0..p.len() {
        let r = Complex64::from_polar(1.0, -sp.jxi[k] * dt);
        p[k] *= r;
        m[k] *= r.conj();
    }
}

/// Exact linear flow over `dt` (any sign).
pub fn linear_propagator(sp: &Spectral, state: &EvolutionState, dt: f64) -> EvolutionState {
    let (mut p, mut m) = to_hat(sp, state);
    rotate(sp, &mut p, &mut m, dt);
    from_hat(sp, state.t + dt, &p, &m)
}

/// `1/2 int (|u_t|^2 + |u_x|^2 + |u|^2) - (lambda/4) int |u|^4`.
pub fn energy(sp: &Spectral, state: &EvolutionState, lambda: f64) -> f64 {
    let n = sp.grid.n as f64;
    let dx = sp.grid.dz();
    let u = sp.forward(&state.u);
    let ut = sp.forward(&state.ut);
    // Parseval: sum |f|^2 dx = dx / n * sum |f_hat|^2
    let quad: f64 = (0..u.len())
        .map(|k| {
            let xi = sp.wavenumber(k);
            ut[k].norm_sqr() + (1.0 + xi * xi) * u[k].norm_sqr()
        })
        .sum::<f64>()
        * dx
        / n;
    let quartic: f64 = state.u.iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>() * dx;
    0.5 * quad - 0.25 * lambda * quartic
}

fn sup(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<EvolutionState>,
    /// Energy at each snapshot.
    pub energies: Vec<f64>,
    /// `max |E(t) - E(T)| / (|E(T)| (t - T))` over the snapshots.
    pub drift_rate: f64,
    pub steps: usize,
}

/// Strang-split evolution from `initial` up to `t_stop`, recording snapshots at
/// `initial.t + j * snapshot_every`. Negative `dt` runs backwards.
pub fn evolve_to(
    config: &SolverConfig,
    sp: &Spectral,
    initial: &EvolutionState,
    t_stop: f64,
    dt: f64,
) -> Result<Trajectory> {
    let lam = config.lambda;
    let span = t_stop - initial.t;
    let steps = (span / dt).round();
    if !(steps >= 0.0) || (steps * dt - span).abs() > 1e-9 * span.abs().max(1.0) {
        return Err(Error::Config(format!("span {span} is not a whole number of steps {dt}")));
    }
    let steps = steps as usize;
    let every = (config.snapshot_every / dt.abs()).round().max(1.0) as usize;
    let limit = 10.0 * sup(&initial.u).max(f64::MIN_POSITIVE);
    let e0 = energy(sp, initial, lam);
    let (mut p, mut m) = to_hat(sp, initial);
    let mut snapshots = vec![initial.clone()];
    let mut energies = vec![e0];
    let mut drift_rate: f64 = 0.0;
    let i = Complex64::i();
    for step in 1..=steps {
        rotate(sp, &mut p, &mut m, 0.5 * dt);
        let u_hat: Vec<Complex64> = p.iter().zip(&m).map(|(a, b)| a + b).collect();
        let u = sp.inverse(&u_hat);
        if lam != 0.0 {
            let f: Vec<Complex64> = u.iter().map(|&v| lam * v.norm_sqr() * v).collect();
            let f_hat = sp.forward(&f);
            for k in 0..p.len() {
                if config.dealias && !sp.keep[k] {
                    continue;
                }
                let kick = 0.5 * i * dt * f_hat[k] / sp.jxi[k];
                p[k] += kick;
                m[k] -= kick;
            }
        }
        if !u.iter().all(|c| c.re.is_finite() && c.im.is_finite()) || sup(&u) > limit {
            return Err(Error::Instability(format!(
                "sup|u| exceeded 10x its initial value at t = {:.4}",
                initial.t + step as f64 * dt
            )));
        }
        rotate(sp, &mut p, &mut m, 0.5 * dt);
        if step % every == 0 || step == steps {
            let t = initial.t + step as f64 * dt;
            let s = from_hat(sp, t, &p, &m);
            let e = energy(sp, &s, lam);
            if e0 != 0.0 {
                drift_rate = drift_rate.max((e - e0).abs() / (e0.abs() * (t - initial.t).abs()));
            }
            snapshots.push(s);
            energies.push(e);
        }
    }
    Ok(Trajectory { snapshots, energies, drift_rate, steps })
}

/// Forward evolution over `[T, T_end]` with the configured step.
pub fn evolve(config: &SolverConfig, initial: &EvolutionState) -> Result<Trajectory> {
    config.validate()?;
    let sp = Spectral::new(config.grid()?)?;
    if initial.u.len() != config.grid_points || initial.ut.len() != config.grid_points {
        return Err(Error::Shape("state length differs from N".into()));
    }
    evolve_to(config, &sp, initial, config.t_end, config.dt)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalValueReport {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    /// `||u - u~||_{L^2}`.
    pub error_norms: Vec<f64>,
    /// `||u - u_ap||_{L^2}`.
    pub error_uap_norms: Vec<f64>,
    /// `||u~||_{L^2}`.
    pub profile_norms: Vec<f64>,
    /// `||v_ap||_{L^2}`.
    pub correction_norms: Vec<f64>,
    /// `||Im u||_{L^2}`.
    pub im_norms: Vec<f64>,
    /// `int_T^t ||(box + 1) u~ - N(u~)||_{L^2} ds`.
    pub residual_integrals: Vec<f64>,
    pub energies: Vec<f64>,
    pub drift_rate: f64,
    /// `(||A_1||^2 + ||B_1||^2)^{1/2}`.
    pub data_norm: f64,
    pub envelope_ok: bool,
    pub error_ok: bool,
    pub im_ok: bool,
}

/// Sub-intervals per snapshot gap for the residual integral.
const RESIDUAL_SUBSTEPS: usize = 4;

/// Seeds `u(T) = u~(T)`, `u_t(T) = d_t u~(T)`, evolves to `T_end` and compares
/// against the profile at every snapshot.
pub fn final_value_experiment(config: &SolverConfig, profile: &Profile) -> Result<FinalValueReport> {
    config.validate()?;
    if profile.dim() != Dim::One {
        return Err(Error::Capability("final-value experiment is one-dimensional".into()));
    }
    if !(config.t_start >= 20.0) || !(config.t_end >= 4.0 * config.t_start) {
        return Err(Error::Domain("need T >= 20 and T_end >= 4 T".into()));
    }
    if (profile.data.lambda - config.lambda).abs() > 0.0 {
        return Err(Error::Config("profile and solver couplings differ".into()));
    }
    let xgrid = config.grid()?;
    let (seed, seed_t) = profile.eval_x(config.t_start, &xgrid, Kind::UTilde)?;
    let initial = EvolutionState { t: config.t_start, u: seed.values, ut: seed_t };
    let traj = evolve(config, &initial)?;

    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let mut error_norms = Vec::new();
    let mut error_uap_norms = Vec::new();
    let mut profile_norms = Vec::new();
    let mut correction_norms = Vec::new();
    let mut im_norms = Vec::new();
    for s in &traj.snapshots {
        let ut = profile.eval_x(s.t, &xgrid, Kind::UTilde)?.0.values;
        let ua = profile.eval_x(s.t, &xgrid, Kind::UAp)?.0.values;
        let diff = |a: &[Complex64]| -> Vec<Complex64> { s.u.iter().zip(a).map(|(x, y)| x - y).collect() };
        error_norms.push(xgrid.l2(&diff(&ut)));
        error_uap_norms.push(xgrid.l2(&diff(&ua)));
        profile_norms.push(xgrid.l2(&ut));
        let v: Vec<Complex64> = ut.iter().zip(&ua).map(|(a, b)| a - b).collect();
        correction_norms.push(xgrid.l2(&v));
        im_norms.push(xgrid.l2(&s.u.iter().map(|c| c.im).collect::<Vec<f64>>()));
    }

    // Trapezoid in s on a refinement of the snapshot times.
    let mut residual_integrals = vec![0.0];
    let mut prev = residual_norm(profile, Variant::WithCorrection, times[0])?;
    let mut acc = 0.0;
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / RESIDUAL_SUBSTEPS as f64;
        for j in 1..=RESIDUAL_SUBSTEPS {
            let r = residual_norm(profile, Variant::WithCorrection, w[0] + j as f64 * h)?;
            acc += 0.5 * h * (prev + r);
            prev = r;
        }
        residual_integrals.push(acc);
    }

    let zg = profile.grid();
    let data_norm = (zg.l2(&profile.data.a1).powi(2) + zg.l2(&profile.data.b1).powi(2)).sqrt();
    let envelope_ok = error_norms.iter().zip(&residual_integrals).all(|(e, r)| *e <= 5.0 * r || *e == 0.0);
    let error_ok = error_norms.iter().all(|e| *e <= 0.1 * profile_norms[0]);
    let im_min = im_norms.iter().copied().fold(f64::INFINITY, f64::min);
    let im_ok = im_min >= 0.3 * data_norm;
    Ok(FinalValueReport {
        config: *config,
        times,
        error_norms,
        error_uap_norms,
        profile_norms,
        correction_norms,
        im_norms,
        residual_integrals,
        energies: traj.energies,
        drift_rate: traj.drift_rate,
        data_norm,
        envelope_ok,
        error_ok,
        im_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SolverConfig {
        SolverConfig { half_width: 40.0, grid_points: 256, dt: 0.05, lambda: 0.0, t_start: 0.0, t_end: 20.0, dealias: false, snapshot_every: 1.0 }
    }

    fn plane_wave(g: &Grid, k: i64) -> EvolutionState {
        let xi = std::f64::consts::PI / g.half_width * k as f64;
        let w = (1.0 + xi * xi).sqrt();
        let u: Vec<Complex64> = (0..g.n).map(|i| Complex64::from_polar(1.0, xi * g.coord(i))).collect();
        let ut = u.iter().map(|c| -Complex64::i() * w * c).collect();
        EvolutionState { t: 0.0, u, ut }
    }

    #[test]
    fn right_mover_is_phi_plus() {
        let g = small_config().grid().unwrap();
        let sp = Spectral::new(g).unwrap();
        let (p, m) = half_kg_variables(&sp, &plane_wave(&g, 5));
        let s = plane_wave(&g, 5);
        assert!(p.iter().zip(&s.u).all(|(a, b)| (a - b).norm() < 1e-12));
        assert!(m.iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn plane_wave_period() {
        let g = small_config().grid().unwrap();
        let sp = Spectral::new(g).unwrap();
        let s = plane_wave(&g, 3);
        let xi = std::f64::consts::PI / g.half_width * 3.0;
        let period = 2.0 * std::f64::consts::PI / (1.0 + xi * xi).sqrt();
        let r = linear_propagator(&sp, &s, period);
        assert!(r.u.iter().zip(&s.u).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn config_checks() {
        let mut c = small_config();
        c.half_width = 10.0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.dt = 1.0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.grid_points = 100;
        assert!(c.validate().is_err());
        assert!(small_config().validate().is_ok());
    }

    #[test]
    fn blow_up_is_reported() {
        let mut c = small_config();
        c.lambda = 50.0;
        c.dt = 0.01;
        let g = c.grid().unwrap();
        let u: Vec<Complex64> = (0..g.n).map(|i| Complex64::new(3.0 * (-g.coord(i).powi(2)).exp(), 0.0)).collect();
        let s = EvolutionState { t: 0.0, ut: vec![Complex64::new(0.0, 0.0); g.n], u };
        assert!(matches!(evolve(&c, &s), Err(Error::Instability(_))));
    }
}

use std::f64::consts::PI;

use nlkg::coeffs::Dim;
use nlkg::grid::Grid;
use nlkg::profiles::{DataSpec, Profile};
use nlkg::solver::*;
use nlkg::Error;
use num_complex::Complex64;

fn config(lambda: f64, dt: f64) -> SolverConfig {
    SolverConfig { half_width: 60.0, grid_points: 1024, dt, lambda, t_start: 0.0, t_end: 50.0, dealias: true, snapshot_every: 1.0 }
}

fn bump_state(g: &Grid, amp: f64) -> EvolutionState {
    let u = (0..g.n)
        .map(|i| {
            let x = g.coord(i);
            let e = (-0.5 * x * x).exp();
            Complex64::new(amp * e, 0.3 * amp * x * e)
        })
        .collect();
    let ut = (0..g.n).map(|i| Complex64::new(0.0, 0.2 * amp * (-0.5 * g.coord(i).powi(2)).exp())).collect();
    EvolutionState { t: 0.0, u, ut }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn real_state_has_conjugate_partner() {
    let c = config(1.0, 0.05);
    let g = c.grid().unwrap();
    let sp = Spectral::new(g).unwrap();
    let u = (0..g.n).map(|i| Complex64::new((-0.5 * g.coord(i).powi(2)).exp(), 0.0)).collect();
    let ut = (0..g.n).map(|i| Complex64::new(g.coord(i) * (-0.5 * g.coord(i).powi(2)).exp(), 0.0)).collect();
    let (p, m) = half_kg_variables(&sp, &EvolutionState { t: 0.0, u, ut });
    // phi_- = conj(phi_+) pointwise for real (u, u_t)
    assert!(max_diff(&m, &p.iter().map(|v| v.conj()).collect::<Vec<_>>()) < 1e-14);
}

#[test]
fn half_wave_round_trip() {
    let c = config(1.0, 0.05);
    let g = c.grid().unwrap();
    let sp = Spectral::new(g).unwrap();
    let s = bump_state(&g, 1.0);
    let (p, m) = half_kg_variables(&sp, &s);
    let r = from_half_kg(&sp, s.t, &p, &m);
    assert!(max_diff(&r.u, &s.u) < 1e-12 && max_diff(&r.ut, &s.ut) < 1e-12);
}

#[test]
fn linear_flow_preserves_half_wave_norms() {
    let c = config(0.0, 0.05);
    let g = c.grid().unwrap();
    let sp = Spectral::new(g).unwrap();
    let s = bump_state(&g, 1.0);
    assert!(max_diff(&linear_propagator(&sp, &s, 0.0).u, &s.u) < 1e-15);
    let (p0, m0) = half_kg_variables(&sp, &s);
    let (n0, k0) = (g.l2(&p0), g.l2(&m0));
    let one = linear_propagator(&sp, &s, 37.3);
    let (p, m) = half_kg_variables(&sp, &one);
    assert!((g.l2(&p) / n0 - 1.0).abs() < 1e-14 && (g.l2(&m) / k0 - 1.0).abs() < 1e-14);

    // 10^4 steps of the multiplier without leaving frequency space
    let long = SolverConfig { half_width: 600.0, t_end: 500.0, snapshot_every: 500.0, ..c };
    let lg = long.grid().unwrap();
    let lsp = Spectral::new(lg).unwrap();
    let ls = bump_state(&lg, 1.0);
    let (p0, m0) = half_kg_variables(&lsp, &ls);
    let tr = evolve(&long, &ls).unwrap();
    assert_eq!(tr.steps, 10_000);
    let (p, m) = half_kg_variables(&lsp, tr.snapshots.last().unwrap());
    let (ep, em) = ((lg.l2(&p) / lg.l2(&p0) - 1.0).abs(), (lg.l2(&m) / lg.l2(&m0) - 1.0).abs());
    assert!(ep < 1e-13 && em < 1e-13, "{ep:e} {em:e}");
}

#[test]
fn zero_coupling_matches_the_linear_propagator() {
    let c = config(0.0, 0.05);
    let g = c.grid().unwrap();
    let sp = Spectral::new(g).unwrap();
    let s = bump_state(&g, 1.0);
    let tr = evolve(&c, &s).unwrap();
    let steps = tr.steps as f64;
    let exact = linear_propagator(&sp, &s, 50.0);
    let last = tr.snapshots.last().unwrap();
    assert!(max_diff(&last.u, &exact.u) / steps < 1e-12);
    assert!(max_diff(&last.ut, &exact.ut) / steps < 1e-12);

    // a right-moving plane wave comes back after one period
    let k = 4.0 * PI / g.half_width;
    let w = (1.0 + k * k).sqrt();
    let u: Vec<Complex64> = (0..g.n).map(|i| Complex64::from_polar(1.0, k * g.coord(i))).collect();
    let ut = u.iter().map(|v| -Complex64::i() * w * v).collect();
    let wave = EvolutionState { t: 0.0, u: u.clone(), ut };
    let back = linear_propagator(&sp, &wave, 2.0 * PI / w);
    assert!(max_diff(&back.u, &u) < 1e-12);
}

#[test]
fn energy_drift_is_small_for_small_data() {
    for lambda in [1.0, -1.0] {
        let c = config(lambda, 0.05);
        let g = c.grid().unwrap();
        let tr = evolve(&c, &bump_state(&g, 0.05)).unwrap();
        assert!(tr.drift_rate < 1e-6, "lambda {lambda}: {:e}", tr.drift_rate);
        let e0 = tr.energies[0];
        assert!(tr.energies.iter().all(|e| ((e - e0) / e0).abs() < 1e-6));
    }
}

#[test]
fn halving_the_step_quarters_the_drift() {
    let coarse = config(1.0, 0.05);
    let fine = config(1.0, 0.025);
    let g = coarse.grid().unwrap();
    let s = bump_state(&g, 0.3);
    let (a, b) = (evolve(&coarse, &s).unwrap().drift_rate, evolve(&fine, &s).unwrap().drift_rate);
    assert!(a / b >= 4.0, "{a:e} / {b:e}");
}

#[test]
fn time_reversal_round_trip() {
    let c = config(1.0, 0.05);
    let g = c.grid().unwrap();
    let sp = Spectral::new(g).unwrap();
    let s = bump_state(&g, 0.5);
    let fwd = evolve(&c, &s).unwrap();
    let back = evolve_to(&c, &sp, fwd.snapshots.last().unwrap(), 0.0, -c.dt).unwrap();
    let end = back.snapshots.last().unwrap();
    assert!(end.t.abs() < 1e-9);
    assert!(max_diff(&end.u, &s.u) < 1e-8 && max_diff(&end.ut, &s.ut) < 1e-8);
    assert!(matches!(evolve_to(&c, &sp, &s, 1.03, 0.05), Err(Error::Config(_))));
}

#[test]
fn two_dimensional_evolution_is_refused() {
    assert!(matches!(Spectral::new(Grid::new(Dim::Two, 16, 4.0).unwrap()), Err(Error::Capability(_))));
}

#[test]
fn zero_coupling_final_value_run() {
    let cfg = SolverConfig { lambda: 0.0, ..SolverConfig::default() };
    let p = Profile::build(DataSpec::canonical(Dim::One, 0.0).build().unwrap(), 0).unwrap();
    assert!(p.phases.s_a.iter().chain(&p.phases.s_b).all(|s| *s == 0.0));
    let r = final_value_experiment(&cfg, &p).unwrap();
    assert!(r.envelope_ok && r.error_ok, "{:?}", r.error_norms);
    assert!(r.correction_norms.iter().all(|v| *v == 0.0));
    // the error grows ever more slowly as the defect decays
    let n = r.error_norms.len();
    let (first, second) = (r.error_norms[n / 2] - r.error_norms[0], r.error_norms[n - 1] - r.error_norms[n / 2]);
    assert!(second < first, "{first:e} {second:e}");
}

#[test]
fn final_value_run_triangle_inequality() {
    let cfg = SolverConfig::default();
    let p = Profile::build(DataSpec::canonical(Dim::One, 1.0).build().unwrap(), 0).unwrap();
    let r = final_value_experiment(&cfg, &p).unwrap();
    for k in 0..r.times.len() {
        let gap = (r.error_uap_norms[k] - r.error_norms[k]).abs();
        assert!(gap <= r.correction_norms[k] * (1.0 + 1e-12) + 1e-15);
    }
    // v_ap decays like t^{-1}: its L^2 norm carries a factor t^{-1/2} from the volume
    let (t0, t1) = (r.times[0], *r.times.last().unwrap());
    let slope = (r.correction_norms.last().unwrap() / r.correction_norms[0]).ln() / (t1 / t0).ln();
    assert!((-1.1..=-0.9).contains(&slope), "{slope}");
    assert!(r.drift_rate < 1e-6);
}

#[test]
fn final_value_preconditions() {
    let p = Profile::build(DataSpec::canonical(Dim::One, 1.0).build().unwrap(), 0).unwrap();
    let short = SolverConfig { t_end: 150.0, ..SolverConfig::default() };
    assert!(matches!(final_value_experiment(&short, &p), Err(Error::Domain(_))));
    let mismatch = SolverConfig { lambda: 2.0, ..SolverConfig::default() };
    assert!(matches!(final_value_experiment(&mismatch, &p), Err(Error::Config(_))));
}

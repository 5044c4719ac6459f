mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use nlkg::coeffs::*;
use nlkg::elliptic::*;
use nlkg::Error;

// Defining integrals evaluated at 30 digits with an independent tool.
const L_HALF: [f64; 7] = [
    0.09174794308714153557,
    0.77369408280174538475,
    1.1845053488808964056,
    0.22731537990486794973,
    -0.025626704364044470392,
    0.0060642631221801360655,
    -0.0018316451693407968973,
];
const L_ONE: [f64; 7] = [
    0.33953054526271004964,
    1.6976527263135502482,
    1.6976527263135502482,
    0.33953054526271004964,
    -0.04850436360895857852,
    0.01616812120298619284,
    -0.0073491460013573603818,
];
const L_TWO: [f64; 7] = [
    0.90926151961947179891,
    4.7380213955235856225,
    3.094776331206981539,
    0.36699177234856614228,
    -0.029735659990016248784,
    0.0054786075012957045224,
    -0.0013533238685972399611,
];

#[test]
fn quadratic_coefficients_match_frozen_values() {
    for (zeta, want) in [(0.5, L_HALF), (1.0, L_ONE), (2.0, L_TWO)] {
        let (table, _) = ln_table_quadrature(zeta, Dim::Two, -2, 4).unwrap();
        for (q, w) in table.iter().zip(want) {
            assert!((q.value - w).abs() < 1e-11, "zeta {zeta}: {} vs {w}", q.value);
            assert!(q.im_residue < 1e-12);
        }
        for (n, w) in (-2..=4).zip(want) {
            assert!((ln_quadrature(n, zeta, Dim::Two).unwrap().value - w).abs() < 1e-11);
        }
    }
}

#[test]
fn adaptive_oracle_agrees_with_trapezoid() {
    for zeta in [0.3, 0.8, 1.0, 1.7] {
        for n in [-3, 0, 2, 5] {
            for (dim, p) in [(Dim::One, 3), (Dim::Two, 2)] {
                let oracle = common::ln_integral(n, zeta, p);
                let got = ln_quadrature(n, zeta, dim).unwrap().value;
                assert!((got - oracle).abs() < 1e-10, "n {n} zeta {zeta} p {p}: {got} vs {oracle}");
            }
        }
    }
}

#[test]
fn l0_at_one_is_sixteen_over_three_pi() {
    let exact = 16.0 / (3.0 * PI);
    assert_eq!(l0_closed_tagged(1.0).unwrap(), (exact, Method::ClosedFormLimit));
    assert!((ln_quadrature(0, 1.0, Dim::Two).unwrap().value - exact).abs() < 1e-10);
}

#[test]
fn l0_closed_form_branches() {
    assert_eq!(l0_closed_tagged(1.0 + 5e-5).unwrap().1, Method::Quadrature);
    assert_eq!(l0_closed_tagged(1.5).unwrap().1, Method::ClosedForm);
    for zeta in [0.01, 0.5, 0.9999, 1.0001, 3.0, 40.0] {
        let q = ln_quadrature(0, zeta, Dim::Two).unwrap().value;
        assert_relative_eq!(l0_closed(zeta).unwrap(), q, max_relative = 1e-11);
    }
}

#[test]
fn l0_derivatives_against_finite_differences() {
    let f = |z: f64| l0_closed(z).unwrap();
    for zeta in [0.3, 0.7, 1.3, 2.5] {
        let h = 1e-3;
        assert!((l0_deriv(zeta, 1).unwrap() - common::d1_4(f, zeta, h)).abs() < 1e-9);
        assert!((l0_deriv(zeta, 2).unwrap() - common::d2_4(f, zeta, h)).abs() < 1e-6);
    }
    assert_eq!(l0_deriv(1.0, 1).unwrap(), 4.0 / PI);
    assert_eq!(l0_deriv(1.0, 2).unwrap(), 2.0 / PI);
    // continuity through the limit values
    assert!((l0_deriv(1.0 + 1e-7, 1).unwrap() - 4.0 / PI).abs() < 1e-6);
    assert!((l0_deriv(1.0 - 1e-7, 2).unwrap() - 2.0 / PI).abs() < 1e-5);
    assert!(matches!(l0_deriv(1.0, 3), Err(Error::Domain(_))));
}

#[test]
fn derivative_quadrature_cross_check() {
    for zeta in [0.4, 1.6] {
        for order in [1, 2] {
            let q = l0_deriv_quadrature(zeta, order).unwrap();
            assert!((q.value - l0_deriv(zeta, order).unwrap()).abs() < 1e-10);
        }
    }
}

#[test]
fn cubic_table_is_exact() {
    for zeta in [0.25_f64, 1.0, 3.0] {
        let want = [zeta * zeta, zeta.powi(3) + 2.0 * zeta, 1.0 + 2.0 * zeta * zeta, zeta];
        let (table, _) = ln_table_quadrature(zeta, Dim::One, -4, 3).unwrap();
        for (n, q) in (-4..=3).zip(&table) {
            let exact = cubic_coeff(n, zeta);
            if (-2..=1).contains(&n) {
                assert_eq!(exact, want[(n + 2) as usize]);
            } else {
                assert_eq!(exact, 0.0);
            }
            assert!((q.value - exact).abs() < 1e-10);
        }
    }
}

#[test]
fn cubic_derivatives_against_finite_differences() {
    for n in -2..=1 {
        let f = |z: f64| cubic_coeff(n, z);
        assert!((cubic_coeff_deriv(n, 0.7, 1) - common::d1(f, 0.7, 1e-4)).abs() < 1e-7);
        assert!((cubic_coeff_deriv(n, 0.7, 2) - common::d2(f, 0.7, 1e-3)).abs() < 1e-5);
    }
}

#[test]
fn reflection_identity_both_dimensions() {
    for dim in [Dim::One, Dim::Two] {
        for zeta in [0.25, 0.5, 0.9, 2.0, 4.0] {
            for n in -8..=8 {
                assert!(reflection_residual(n, zeta, dim).unwrap() < 1e-10);
            }
        }
    }
}

#[test]
fn decay_rates() {
    let one = decay_fit(1.0, 64).unwrap();
    assert!((-3.3..=-2.7).contains(&one.slope), "{one:?}");
    assert!(one.cubic_lower_constant > 0.1);
    let half = decay_fit(0.5, 64).unwrap();
    assert!(half.underflow || half.slope < -6.0, "{half:?}");
    assert!(decay_fit(1.0, 8).is_err());
}

#[test]
fn third_derivative_grows_logarithmically() {
    let probes: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&h| l0_third_deriv_probe(h).unwrap()).collect();
    assert!(probes[0] < probes[1] && probes[1] < probes[2]);
    for (p, h) in probes.iter().zip([1e-2_f64, 1e-3, 1e-4]) {
        let r = p / h.ln().abs();
        assert!((0.2..=3.0).contains(&r), "ratio {r}");
    }
}

#[test]
fn l0_asymptotics() {
    assert!((l0_closed(1e-3).unwrap() - 1.0).abs() < 5e-3);
    assert!((l0_closed(100.0).unwrap() / 150.0 - 1.0).abs() < 1e-2);
}

#[test]
fn complexness_sign() {
    assert!(complexness_discriminant(0.5).unwrap() < 0.0);
    assert!(complexness_discriminant(2.0).unwrap() > 0.0);
    assert_eq!(complexness_discriminant(1.0).unwrap(), 0.0);
}

#[test]
fn uniform_bound_is_stable_under_refinement() {
    let coarse = uniform_bound_check(2.0, 32, 8).unwrap();
    let fine = uniform_bound_check(2.0, 64, 16).unwrap();
    for k in 0..3 {
        assert!(fine.max_by_order[k].is_finite());
        assert!(fine.max_by_order[k] <= 1.25 * coarse.max_by_order[k]);
    }
}

#[test]
fn table_methods_and_order_three() {
    let t = coeff_table(Dim::Two, 0.5, -1, 1, 0, false).unwrap();
    assert_eq!(t.methods, vec![Method::Quadrature, Method::ClosedForm, Method::Quadrature]);
    let t = coeff_table(Dim::One, 0.5, -2, 1, 0, false).unwrap();
    assert!(t.methods.iter().all(|&m| m == Method::Symbolic));
    assert!(matches!(coeff_table(Dim::Two, 0.5, 0, 0, 3, false), Err(Error::Domain(_))));
    assert!(matches!(coeff_table(Dim::Two, -1.0, 0, 0, 0, false), Err(Error::Domain(_))));
}

#[test]
fn elliptic_frozen_values() {
    for (k, kv, ev) in [
        (0.5, 1.6857503548125960429, 1.4674622093394271555),
        (0.9, 2.2805491384227702046, 1.1716970527816141412),
        (0.999, 4.4955963958421441704, 1.0039944099655078177),
    ] {
        let m = Modulus::new(k).unwrap();
        assert_relative_eq!(ellip_k(m).unwrap(), kv, max_relative = 1e-14);
        assert_relative_eq!(ellip_e(m), ev, max_relative = 1e-14);
    }
}

#[test]
fn elliptic_against_defining_integrals() {
    for j in 0..50 {
        let k = 0.98 * j as f64 / 49.0;
        let m = Modulus::new(k).unwrap();
        assert!((ellip_k(m).unwrap() - common::k_integral(k)).abs() < 1e-11, "K({k})");
        assert!((ellip_e(m) - common::e_integral(k)).abs() < 1e-11, "E({k})");
    }
}

#[test]
fn log_bracket_near_one() {
    for eps in [1e-3, 1e-6, 1e-9] {
        let m = Modulus::new(1.0 - eps).unwrap();
        let (lo, hi) = log_singularity_bracket(m).unwrap();
        let ratio = ellip_k(m).unwrap() / eps.ln().abs();
        assert!(lo <= ratio && ratio <= hi, "{lo} {ratio} {hi}");
    }
    assert!(matches!(ellip_k(Modulus::new(1.0).unwrap()), Err(Error::Divergence(_))));
    assert_eq!(ellip_e(Modulus::new(1.0).unwrap()), 1.0);
}

#[test]
fn l0_large_ratio_keeps_relative_accuracy() {
    // defining integral at 30 digits
    for (zeta, want) in [
        (3.9999, 6.04684971074284801814),
        (4.0001, 6.04714734831455967016),
        (8.0, 12.0234528037122280547),
        (100.0, 150.001875007812646489),
        (1e4, 15000.0000187500000078),
        (1e6, 1500000.00000018750000),
    ] {
        assert_relative_eq!(l0_closed(zeta).unwrap(), want, max_relative = 1e-14);
        assert_relative_eq!(l0_fast(zeta).unwrap(), want, max_relative = 1e-14);
    }
}

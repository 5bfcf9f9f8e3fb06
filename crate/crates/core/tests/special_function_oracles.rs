mod common;

use common::{bisect, rel_err, Fixed};
use faslab_core::channel::{mu_modified, mu_simple, PortGrid};
use faslab_core::special_functions::{
    bessel_i0_scaled, bessel_j0, bessel_j1, gaussian_q, hyp1f2_term, integrate, integrate_breakpoints,
    marcum_q1, QuadratureSpec,
};
use proptest::prelude::*;

fn j0_ref(x: f64) -> f64 {
    common::j0(&Fixed::from_f64(x)).to_f64()
}

fn j1_ref(x: f64) -> f64 {
    common::j1(&Fixed::from_f64(x)).to_f64()
}

#[test]
fn first_root_of_j0() {
    let root = bisect(2.0, 3.0, j0_ref);
    assert!((root - 2.404_825_557_695_773).abs() < 1e-15);
    assert!(bessel_j0(2.404_825_557_695_773).unwrap().abs() < 1e-10);
    assert!(bessel_j0(root).unwrap().abs() < 1e-10);
}

#[test]
fn first_root_of_j1() {
    let root = bisect(3.0, 4.5, j1_ref);
    assert!((root - 3.831_705_970_207_512_3).abs() < 1e-15);
    assert!(bessel_j1(3.831_705_970_207_512_3).unwrap().abs() < 1e-10);
}

#[test]
fn bessel_j_against_series() {
    for i in 1..=40 {
        let x = i as f64 * 0.37;
        assert!((bessel_j0(x).unwrap() - j0_ref(x)).abs() < 1e-14, "J0({x})");
        assert!((bessel_j1(x).unwrap() - j1_ref(x)).abs() < 1e-14, "J1({x})");
    }
}

#[test]
fn j1_is_minus_derivative_of_j0() {
    let h = 1e-5;
    let mut x = 0.1;
    while x <= 20.0 {
        let fd = -(bessel_j0(x + h).unwrap() - bessel_j0(x - h).unwrap()) / (2.0 * h);
        let j1 = bessel_j1(x).unwrap();
        // Relative where J1 is not near a root; absolute floor otherwise.
        assert!((fd - j1).abs() <= 1e-6 * j1.abs().max(1e-3), "x={x}");
        x += 0.173;
    }
}

#[test]
fn i0_scaled_at_one() {
    let one = Fixed::one();
    let want = (&common::i0(&one) * &common::exp(&-&one)).to_f64();
    assert!(rel_err(bessel_i0_scaled(1.0).unwrap(), want) < 1e-12);
}

#[test]
fn i0_scaled_against_series_over_moderate_range() {
    for &x in &[0.01, 0.5, 3.0, 12.0, 30.0] {
        let xf = Fixed::from_f64(x);
        let want = (&common::i0(&xf) * &common::exp(&-&xf)).to_f64();
        assert!(rel_err(bessel_i0_scaled(x).unwrap(), want) < 1e-13, "x={x}");
    }
}

#[test]
fn hyp1f2_at_extended_precision() {
    let pi = common::pi();
    for &w in &[0.1, 0.5, 1.5, 3.0, 10.0] {
        let pw = &pi * &Fixed::from_f64(w);
        let want = common::hyp1f2(&(&pw * &pw)).to_f64();
        let got = hyp1f2_term(w).unwrap();
        assert!(rel_err(got, want) < 1e-10, "W={w}: {got} vs {want}");
    }
}

fn mu_modified_ref(w: f64) -> f64 {
    let pi = common::pi();
    let pw = &pi * &Fixed::from_f64(w);
    let x = Fixed(pw.0.clone() * 2);
    let radicand = &common::hyp1f2(&(&pw * &pw)) - &common::j1(&x).div(&x);
    (2.0 * radicand.to_f64()).sqrt()
}

#[test]
fn mu_modified_at_extended_precision() {
    for &w in &[0.5, 2.0, 10.0] {
        let got = mu_modified(&PortGrid::new(8, w).unwrap()).unwrap();
        let want = mu_modified_ref(w);
        assert!(got > 0.0 && got < 1.0);
        assert!(rel_err(got, want) < 1e-9, "W={w}: {got} vs {want}");
    }
}

#[test]
fn mu_simple_last_port_of_half_wavelength_grid() {
    let grid = PortGrid::new(10, 0.5).unwrap();
    let want = common::j0(&common::pi()).to_f64();
    let got = mu_simple(10, &grid).unwrap();
    assert!((got - want).abs() < 1e-14);
    assert!((got - -0.3042).abs() < 1e-4);
}

/// `Q1(a, b) = int_b^inf x exp(-(x - a)²/2) [e^{-ax} I0(ax)] dx`
fn marcum_by_quadrature(a: f64, b: f64) -> f64 {
    let spec = QuadratureSpec::default().with_tolerances(1e-300, 1e-13).unwrap();
    let upper = a.max(b) + 40.0;
    let mut breaks = vec![b];
    for p in [a - 5.0, a, a + 5.0] {
        if p > b {
            breaks.push(p);
        }
    }
    breaks.push(upper);
    integrate_breakpoints(
        |x| x * (-0.5 * (x - a) * (x - a)).exp() * bessel_i0_scaled(a * x).unwrap(),
        &breaks,
        &spec,
    )
    .unwrap()
    .value
}

#[test]
fn marcum_matches_quadrature_example() {
    let want = marcum_by_quadrature(1.5, 2.0);
    assert!(rel_err(marcum_q1(1.5, 2.0).unwrap(), want) < 1e-8);
}

#[test]
fn marcum_matches_quadrature_on_grid() {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let a = 8.0 * i as f64 / 19.0;
            let b = 8.0 * j as f64 / 19.0;
            let got = marcum_q1(a, b).unwrap();
            let want = if b == 0.0 { 1.0 } else { marcum_by_quadrature(a, b) };
            worst = worst.max(rel_err(got, want));
        }
    }
    assert!(worst < 1e-8, "worst relative error {worst:e}");
}

#[test]
fn marcum_monotone_on_grid() {
    let grid: Vec<f64> = (0..20).map(|i| 8.0 * i as f64 / 19.0).collect();
    for &a in &grid {
        for w in grid.windows(2) {
            assert!(marcum_q1(a, w[0]).unwrap() >= marcum_q1(a, w[1]).unwrap());
            assert!(marcum_q1(w[0], a).unwrap() <= marcum_q1(w[1], a).unwrap());
        }
    }
}

#[test]
fn gaussian_quantile_by_bisection() {
    let spec = QuadratureSpec::default().with_tolerances(1e-300, 1e-14).unwrap();
    let tail = |x: f64| {
        integrate(
            |t| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            x,
            x + 40.0,
            &spec,
        )
        .unwrap()
        .value
    };
    let q95 = bisect(1.0, 2.0, |x| tail(x) - 0.05);
    assert!((q95 - 1.644_853_626_951_472_2).abs() < 1e-9);
    assert!((gaussian_q(1.644_853_626_951_472_2).unwrap() - 0.05).abs() < 1e-9);
    assert!((gaussian_q(1.7).unwrap() - tail(1.7)).abs() < 1e-14);
}

#[test]
fn special_functions_reject_bad_input() {
    assert!(bessel_j0(f64::NAN).is_err());
    assert!(bessel_j1(f64::INFINITY).is_err());
    assert!(bessel_i0_scaled(-1.0).is_err());
    assert!(hyp1f2_term(0.0).is_err());
    assert!(hyp1f2_term(-1.0).is_err());
    assert!(gaussian_q(f64::NAN).is_err());
}

proptest! {
    #[test]
    fn j0_even_j1_odd(x in -50.0f64..50.0) {
        prop_assert_eq!(bessel_j0(x).unwrap(), bessel_j0(-x).unwrap());
        prop_assert_eq!(bessel_j1(x).unwrap(), -bessel_j1(-x).unwrap());
        prop_assert!(bessel_j0(x).unwrap().abs() <= 1.0);
    }

    #[test]
    fn i0_scaled_in_unit_interval_and_decreasing(x in 0.0f64..2000.0, dx in 1e-3f64..10.0) {
        let a = bessel_i0_scaled(x).unwrap();
        let b = bessel_i0_scaled(x + dx).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(b < a);
    }

    #[test]
    fn gaussian_q_reflection(x in -8.0f64..8.0) {
        let s = gaussian_q(x).unwrap() + gaussian_q(-x).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn marcum_in_range_and_monotone(a in 0.0f64..60.0, b in 0.0f64..60.0, db in 0.0f64..2.0) {
        let q = marcum_q1(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!(marcum_q1(a, b + db).unwrap() <= q);
        prop_assert!(marcum_q1(a + db, b).unwrap() >= q);
    }
}

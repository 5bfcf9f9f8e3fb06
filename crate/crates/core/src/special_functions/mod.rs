//! Scalar special functions and quadrature.
//!
//! `J0`, `J1` and `erfc` come from `libm`; the scaled `I0`, the first-order
//! Marcum Q-function and the `1F2` term are implemented here.

mod marcum;
mod quadrature;

pub use marcum::{marcum_q1, marcum_q1_pair, MarcumQ};
pub use quadrature::{
    integrate, integrate_breakpoints, integrate_panels, GaussLegendre, Integral, QuadratureSpec,
};

pub(crate) use marcum::marcum_pair;

use std::f64::consts::{PI, SQRT_2};

use crate::error::{FasError, Result};

fn require_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(FasError::domain(format!("{what}: argument {x} is not finite")))
    }
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> Result<f64> {
    require_finite(x, "bessel_j0")?;
    Ok(libm::j0(x))
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> Result<f64> {
    require_finite(x, "bessel_j1")?;
    Ok(libm::j1(x))
}

/// `e^{-x} I0(x)` for `x >= 0`.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    require_finite(x, "bessel_i0_scaled")?;
    if x < 0.0 {
        return Err(FasError::domain(format!("bessel_i0_scaled: negative argument {x}")));
    }
    Ok(i0_scaled(x))
}

/// Above this argument the Hankel asymptotic expansion is used.
const I0_ASYMPTOTIC_FROM: f64 = 700.0;

/// Number of backward-recurrence steps needed so that `I_K(x)/I_0(x)` is negligible.
pub(crate) fn miller_start(x: f64) -> usize {
    40 + (10.0 * x.sqrt()).ceil() as usize
}

/// Unchecked `e^{-x} I0(x)`.
///
/// Uses the normalisation `I0 + 2 sum_k I_k = e^x` with ratios `I_k/I_{k-1}`
/// from the backward continued-fraction recurrence, so no term overflows.
pub(crate) fn i0_scaled(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x > I0_ASYMPTOTIC_FROM {
        // e^{-x} I0(x) ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            term *= (2.0 * kf - 1.0).powi(2) / (8.0 * x * kf);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        return sum / (2.0 * PI * x).sqrt();
    }
    let mut ratio = 0.0;
    let mut tail = 0.0;
    for k in (1..=miller_start(x)).rev() {
        ratio = 1.0 / (2.0 * k as f64 / x + ratio);
        tail = ratio * (1.0 + tail);
    }
    1.0 / (1.0 + 2.0 * tail)
}

/// Standard Gaussian tail `Q(x) = P(Z > x)`.
pub fn gaussian_q(x: f64) -> Result<f64> {
    require_finite(x, "gaussian_q")?;
    Ok(0.5 * libm::erfc(x / SQRT_2))
}

/// `2 pi W` at or below which the alternating series for `1F2` is used.
const HYP1F2_SERIES_LIMIT: f64 = 10.0;

/// `1F2(1/2; 1, 3/2; -pi^2 W^2)`.
///
/// Equal to `(1/X) int_0^X J0(t) dt` with `X = 2 pi W`. The alternating power
/// series is used for `X <= 10` and the integral beyond, where the series
/// cancels catastrophically.
pub fn hyp1f2_term(aperture: f64) -> Result<f64> {
    require_finite(aperture, "hyp1f2_term")?;
    if aperture <= 0.0 {
        return Err(FasError::domain(format!("hyp1f2_term: aperture {aperture} must be positive")));
    }
    let x = 2.0 * PI * aperture;
    if x <= HYP1F2_SERIES_LIMIT {
        Ok(hyp1f2_series(aperture))
    } else {
        hyp1f2_integral(aperture)
    }
}

/// Direct series `sum_k (-pi^2 W^2)^k / ((2k+1) (k!)^2)`.
pub(crate) fn hyp1f2_series(aperture: f64) -> f64 {
    let y = (PI * aperture).powi(2);
    let mut power = 1.0; // (-y)^k / (k!)^2
    let mut sum = 1.0;
    for k in 1..400 {
        let kf = k as f64;
        power *= -y / (kf * kf);
        let term = power / (2.0 * kf + 1.0);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() && kf * kf > y {
            break;
        }
    }
    sum
}

/// Integral form, split at multiples of pi so every panel holds one half-oscillation.
pub(crate) fn hyp1f2_integral(aperture: f64) -> Result<f64> {
    let x = 2.0 * PI * aperture;
    let mut breaks: Vec<f64> = (0..)
        .map(|k| k as f64 * PI)
        .take_while(|&t| t < x)
        .collect();
    breaks.push(x);
    let spec = QuadratureSpec::default().with_tolerances(1e-15, 1e-13)?;
    let integral = integrate_breakpoints(libm::j0, &breaks, &spec)?;
    Ok(integral.value / x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i0_series_scaled(x: f64) -> f64 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..500 {
            term *= q / (k as f64 * k as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum * (-x).exp()
    }

    #[test]
    fn j0_values() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        for x in [0.5, 3.7] {
            assert_eq!(bessel_j0(-x).unwrap(), bessel_j0(x).unwrap());
        }
        assert!(bessel_j0(f64::NAN).is_err());
        assert!(bessel_j0(f64::INFINITY).is_err());
    }

    #[test]
    fn j1_values() {
        assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
        assert_eq!(bessel_j1(-1.3).unwrap(), -bessel_j1(1.3).unwrap());
        assert!(bessel_j1(f64::NAN).is_err());
    }

    #[test]
    fn i0_scaled_basics() {
        assert_eq!(bessel_i0_scaled(0.0).unwrap(), 1.0);
        let a = bessel_i0_scaled(5.0).unwrap();
        let b = bessel_i0_scaled(50.0).unwrap();
        let c = bessel_i0_scaled(500.0).unwrap();
        assert!(a > b && b > c && c > 0.0);
        assert!(bessel_i0_scaled(-1.0).is_err());
        assert!(bessel_i0_scaled(f64::NAN).is_err());
    }

    #[test]
    fn i0_scaled_matches_power_series() {
        for &x in &[1e-8, 1e-3, 0.1, 1.0, 2.5, 7.0, 15.0, 30.0] {
            let got = i0_scaled(x);
            let want = i0_series_scaled(x);
            assert!(((got - want) / want).abs() < 1e-13, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn i0_scaled_continuous_across_asymptotic_switch() {
        let below = i0_scaled(I0_ASYMPTOTIC_FROM);
        let above = i0_scaled(I0_ASYMPTOTIC_FROM * (1.0 + 1e-15));
        assert!(((below - above) / below).abs() < 1e-13);
        // Miller side against the expansion well inside its range too.
        let x = 400.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            term *= (2.0 * kf - 1.0).powi(2) / (8.0 * x * kf);
            sum += term;
        }
        let asym = sum / (2.0 * PI * x).sqrt();
        assert!(((i0_scaled(x) - asym) / asym).abs() < 1e-13);
    }

    #[test]
    fn gaussian_tail() {
        assert_eq!(gaussian_q(0.0).unwrap(), 0.5);
        let s = gaussian_q(1.7).unwrap() + gaussian_q(-1.7).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert!(gaussian_q(f64::NAN).is_err());
    }

    #[test]
    fn hyp1f2_small_aperture_limit() {
        assert!((hyp1f2_term(1e-9).unwrap() - 1.0).abs() < 1e-15);
        assert!(hyp1f2_term(0.0).is_err());
        assert!(hyp1f2_term(-1.0).is_err());
    }

    #[test]
    fn hyp1f2_series_and_integral_agree_where_series_is_stable() {
        let mut w = 0.05;
        while w <= 1.5 {
            let s = hyp1f2_series(w);
            let i = hyp1f2_integral(w).unwrap();
            assert!(((s - i) / i).abs() < 1e-9, "W={w}: {s} vs {i}");
            w += 0.05;
        }
        let s = hyp1f2_series(0.1);
        let i = hyp1f2_integral(0.1).unwrap();
        assert!(((s - i) / i).abs() < 1e-10);
    }
}

//! Adaptive Gauss–Kronrod and panelled Gauss–Legendre integration.
//!
//! Both routines are globally adaptive: the interval with the largest error
//! estimate is bisected until the summed estimate meets
//! `max(absolute_tolerance, relative_tolerance * |value|)`.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{FasError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub absolute_tolerance: f64,
    pub relative_tolerance: f64,
    pub max_subdivisions: usize,
    /// Gauss–Legendre nodes per panel for [`integrate_panels`].
    pub fixed_node_count: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            absolute_tolerance: 1e-12,
            relative_tolerance: 1e-10,
            max_subdivisions: 2000,
            fixed_node_count: 64,
        }
    }
}

impl QuadratureSpec {
    pub fn new(
        absolute_tolerance: f64,
        relative_tolerance: f64,
        max_subdivisions: usize,
        fixed_node_count: usize,
    ) -> Result<Self> {
        let spec = Self {
            absolute_tolerance,
            relative_tolerance,
            max_subdivisions,
            fixed_node_count,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same subdivision limits, new tolerances.
    pub fn with_tolerances(self, absolute_tolerance: f64, relative_tolerance: f64) -> Result<Self> {
        Self::new(
            absolute_tolerance,
            relative_tolerance,
            self.max_subdivisions,
            self.fixed_node_count,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.absolute_tolerance > 0.0 && self.absolute_tolerance.is_finite()) {
            return Err(FasError::domain("absolute tolerance must be positive"));
        }
        if !(self.relative_tolerance > 0.0 && self.relative_tolerance.is_finite()) {
            return Err(FasError::domain("relative tolerance must be positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(FasError::domain("max_subdivisions must be at least 1"));
        }
        if self.fixed_node_count < 2 {
            return Err(FasError::domain("fixed_node_count must be at least 2"));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.absolute_tolerance.max(self.relative_tolerance * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

// G7/K15 abscissae and weights on [-1, 1] (positive half, centre first).
const XGK: [f64; 8] = [
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];
const WGK: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];
// Gauss weights for XGK[0], XGK[2], XGK[4], XGK[6].
const WG: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[0] * fc;
    let mut gauss = WG[0] * fc;
    for j in 1..8 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 0 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn apply<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> f64 {
        let centre = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(centre + half * x))
            .sum();
        sum * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn cached_rule(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
    let mut rules = RULES
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    rules
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn adaptive<F, R>(f: &mut F, breakpoints: &[f64], spec: &QuadratureSpec, mut rule: R) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
    R: FnMut(&mut F, f64, f64) -> (f64, f64),
{
    spec.validate()?;
    if breakpoints.len() < 2 {
        return Err(FasError::domain("integration needs at least two breakpoints"));
    }
    for w in breakpoints.windows(2) {
        if !w[0].is_finite() || !w[1].is_finite() || w[0] > w[1] {
            return Err(FasError::domain("integration limits must be finite and ordered"));
        }
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in breakpoints.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (value, error) = rule(f, w[0], w[1]);
        total += value;
        total_err += error;
        heap.push(Piece { a: w[0], b: w[1], value, error });
    }
    let mut subdivisions = heap.len();
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(FasError::NumericalInconsistency(
                "non-finite integrand value".to_string(),
            ));
        }
        if total_err <= spec.target(total) {
            return Ok(Integral { value: total, error_estimate: total_err });
        }
        let Some(worst) = heap.pop() else {
            return Ok(Integral { value: total, error_estimate: total_err });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if subdivisions >= spec.max_subdivisions || mid <= worst.a || mid >= worst.b {
            return Err(FasError::Convergence { estimate: total, error_estimate: total_err });
        }
        let (lv, le) = rule(f, worst.a, mid);
        let (rv, re) = rule(f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        // Re-summing avoids drift from the running update when errors shrink by many orders.
        if subdivisions % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum::<f64>() + lv + rv;
            total_err = heap.iter().map(|p| p.error).sum::<f64>() + le + re;
        }
        heap.push(Piece { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Piece { a: mid, b: worst.b, value: rv, error: re });
        subdivisions += 1;
    }
}

/// Adaptive 15-point Gauss–Kronrod integration of `f` over `[lower, upper]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    lower: f64,
    upper: f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    adaptive(&mut f, &[lower, upper], spec, gauss_kronrod_15)
}

/// As [`integrate`], with the range pre-split at `breakpoints` (sorted, first and last are the limits).
pub fn integrate_breakpoints<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    adaptive(&mut f, breakpoints, spec, gauss_kronrod_15)
}

/// Fixed-order Gauss–Legendre panels (`spec.fixed_node_count` nodes) with adaptive
/// panel splitting. The error of a panel is the difference between the whole-panel
/// rule and the sum over its two halves.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    mut f: F,
    lower: f64,
    upper: f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    spec.validate()?;
    let gl = cached_rule(spec.fixed_node_count);
    adaptive(&mut f, &[lower, upper], spec, |f, a, b| {
        let whole = gl.apply(f, a, b);
        let m = 0.5 * (a + b);
        let halves = gl.apply(f, a, m) + gl.apply(f, m, b);
        (halves, (halves - whole).abs())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand() {
        let r = integrate(|_| 1.0, 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sine_over_half_period() {
        let r = integrate(f64::sin, 0.0, std::f64::consts::PI, &QuadratureSpec::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let p = integrate_panels(f64::sin, 0.0, std::f64::consts::PI, &QuadratureSpec::default()).unwrap();
        assert!((p.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_normalisation_truncated() {
        // exp(-r_max^2) < 1e-16
        let r_max = (16.0 * std::f64::consts::LN_10).sqrt();
        let r = integrate(|r| 2.0 * r * (-r * r).exp(), 0.0, r_max, &QuadratureSpec::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kronrod_weights_are_exact_for_polynomials() {
        // K15 integrates degree <= 22 exactly; G7 degree <= 13.
        let mut f = |x: f64| x.powi(22) + x.powi(10);
        let (v, _) = gauss_kronrod_15(&mut f, -1.0, 1.0);
        assert!((v - (2.0 / 23.0 + 2.0 / 11.0)).abs() < 1e-14);
        let mut g = |x: f64| x.powi(12);
        let (v, e) = gauss_kronrod_15(&mut g, -1.0, 1.0);
        assert!((v - 2.0 / 13.0).abs() < 1e-15);
        assert!(e < 1e-14);
    }

    #[test]
    fn legendre_rule_weights_and_moments() {
        for n in [2, 5, 16, 64] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
            let deg = 2 * n - 2;
            let m = gl.apply(&mut |x: f64| x.powi(deg as i32), -1.0, 1.0);
            assert!((m - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let spec = QuadratureSpec::new(1e-15, 1e-15, 3, 64).unwrap();
        let err = integrate(|x: f64| (1.0 / x.max(1e-300)).sin(), 1e-6, 1.0, &spec).unwrap_err();
        assert!(matches!(err, FasError::Convergence { .. }));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(QuadratureSpec::new(0.0, 1e-10, 10, 64).is_err());
        assert!(QuadratureSpec::new(1e-12, -1.0, 10, 64).is_err());
        assert!(QuadratureSpec::new(1e-12, 1e-10, 0, 64).is_err());
        assert!(QuadratureSpec::new(1e-12, 1e-10, 10, 1).is_err());
        assert!(integrate(|x| x, 1.0, 0.0, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn tighter_tolerance_never_worse() {
        let exact = 1.0 - (-9.0f64).exp();
        let mut spec = QuadratureSpec::new(1e-4, 1e-4, 2000, 64).unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..8 {
            let r = integrate(|x: f64| (-x).exp(), 0.0, 9.0, &spec).unwrap();
            let err = (r.value - exact).abs();
            assert!(err <= last.max(4.0 * f64::EPSILON));
            last = err;
            spec = spec
                .with_tolerances(spec.absolute_tolerance / 2.0, spec.relative_tolerance / 2.0)
                .unwrap();
        }
    }
}

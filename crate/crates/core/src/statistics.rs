//! Law of the best-port amplitude `|g_FAS| = max_k |g_k|` under the reference
//! correlation models, plus empirical-distribution helpers.
//!
//! Conditioning on `t = |g_1|² / sigma²` (unit exponential), the other ports are
//! independent Rician, so
//!
//! ```text
//! C(r) = int_0^{r²/sigma²} e^{-t} prod_{k>=2} [1 - Q1(alpha_k sqrt(t), beta_k r)] dt
//! alpha_k = sqrt(2 mu_k² / (1 - mu_k²)),   beta_k = sqrt(2 / (sigma² (1 - mu_k²)))
//! ```
//!
//! and the density follows by differentiating under the integral sign: a boundary
//! term at `t = r²/sigma²` plus, for each port `i`, the inner integral with factor
//! `i` replaced by `beta_i² r exp(-(a² + b²)/2) I0(ab)`.
//! Products over ports are accumulated as sums of logarithms.

use crate::channel::CorrelationSpec;
use rayon::prelude::*;

use crate::error::{FasError, Result};
use crate::special_functions::{i0_scaled, integrate, integrate_panels, marcum_pair, QuadratureSpec};

/// Ports with `|mu_k|` above this are duplicates of port 1 for the purpose of the maximum.
pub const DUPLICATE_PORT_THRESHOLD: f64 = 1.0 - 1e-9;

/// Tail mass beyond the truncation radius, `N e^{-r²/sigma²}`.
pub const TAIL_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
struct PortTerm {
    /// `alpha_k`, multiplies `sqrt(t)`.
    alpha: f64,
    /// `beta_k`, multiplies `r`.
    beta: f64,
}

/// Analytic law of `|g_FAS|` for a reference-model correlation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeDistribution {
    sigma: f64,
    mu: Vec<f64>,
    terms: Vec<PortTerm>,
    quadrature: QuadratureSpec,
}

/// Inner t-integrals only need relative accuracy; the integrand is positive.
fn default_inner_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        absolute_tolerance: 1e-300,
        relative_tolerance: 1e-11,
        max_subdivisions: 2000,
        fixed_node_count: 64,
    }
}

impl AmplitudeDistribution {
    /// `mu` holds `mu_2 ..= mu_N` (port 1 is the reference, `mu_1 = 1`).
    pub fn new(sigma: f64, mu: Vec<f64>, quadrature: QuadratureSpec) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FasError::domain(format!("sigma {sigma} must be positive and finite")));
        }
        quadrature.validate()?;
        let mut terms = Vec::with_capacity(mu.len());
        for &m in &mu {
            if !m.is_finite() || m.abs() > DUPLICATE_PORT_THRESHOLD {
                return Err(FasError::domain(format!(
                    "|mu| = {} too close to one; drop duplicated ports first",
                    m.abs()
                )));
            }
            let spread = 1.0 - m * m;
            terms.push(PortTerm {
                alpha: (2.0 * m * m / spread).sqrt(),
                beta: (2.0 / spread).sqrt() / sigma,
            });
        }
        Ok(Self { sigma, mu, terms, quadrature })
    }

    /// `N` independent Rayleigh ports (all `mu_k = 0`).
    pub fn independent(sigma: f64, ports: usize) -> Result<Self> {
        if ports == 0 {
            return Err(FasError::domain("need at least one port"));
        }
        Self::new(sigma, vec![0.0; ports - 1], default_inner_quadrature())
    }

    /// Builds the law for a reference-model spec, dropping ports that duplicate port 1.
    pub fn from_spec(spec: &CorrelationSpec) -> Result<Self> {
        let mu = spec.mu().ok_or_else(|| {
            FasError::config(format!(
                "no analytic amplitude law for the {} model",
                spec.model().name()
            ))
        })?;
        let kept = mu[1..]
            .iter()
            .copied()
            .filter(|m| m.abs() <= DUPLICATE_PORT_THRESHOLD)
            .collect();
        Self::new(spec.sigma(), kept, default_inner_quadrature())
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureSpec) -> Result<Self> {
        quadrature.validate()?;
        self.quadrature = quadrature;
        Ok(self)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `mu_2 ..= mu_N` of the retained ports.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Effective port count, including the reference port.
    pub fn ports(&self) -> usize {
        self.mu.len() + 1
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quadrature
    }

    /// Radius beyond which the union bound puts less than [`TAIL_MASS`] of probability.
    pub fn truncation_radius(&self) -> f64 {
        self.sigma * (self.ports() as f64 / TAIL_MASS).ln().sqrt()
    }

    /// `P(|g_FAS| <= r)`.
    pub fn cdf(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        if r == 0.0 {
            return Ok(0.0);
        }
        let upper = (r / self.sigma).powi(2);
        if self.terms.is_empty() {
            return Ok(-(-upper).exp_m1());
        }
        let integral = integrate_panels(
            |t| {
                let log_prod = self.log_product(t, r);
                (log_prod - t).exp()
            },
            0.0,
            upper,
            &self.quadrature,
        )?;
        Ok(integral.value.clamp(0.0, 1.0))
    }

    /// Density of `|g_FAS|` at `r`.
    pub fn pdf(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        if r == 0.0 {
            return Ok(0.0);
        }
        let s2 = self.sigma * self.sigma;
        let upper = r * r / s2;
        let rayleigh = 2.0 * r / s2 * (-upper).exp();
        if self.terms.is_empty() {
            return Ok(rayleigh);
        }
        let boundary = rayleigh * self.log_product(upper, r).exp();
        let inner = integrate_panels(|t| self.derivative_sum(t, r), 0.0, upper, &self.quadrature)?;
        Ok((boundary + inner.value).max(0.0))
    }

    /// `sum_k ln[1 - Q1(alpha_k sqrt(t), beta_k r)]`, `-inf` if any factor vanishes.
    fn log_product(&self, t: f64, r: f64) -> f64 {
        let st = t.sqrt();
        let mut acc = 0.0;
        for term in &self.terms {
            let (_, p) = marcum_pair(term.alpha * st, term.beta * r);
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += p.ln();
        }
        acc
    }

    /// `e^{-t} sum_i [prod_{k != i} (1 - Q1_k)] d/dr[1 - Q1_i]` with every Marcum
    /// factor evaluated once per `t`.
    fn derivative_sum(&self, t: f64, r: f64) -> f64 {
        let st = t.sqrt();
        let mut log_all = 0.0;
        let mut zero_at = None;
        let mut zeros = 0usize;
        // (ln factor, ln derivative) per port
        let mut logs: Vec<(f64, f64)> = Vec::with_capacity(self.terms.len());
        for (i, term) in self.terms.iter().enumerate() {
            let a = term.alpha * st;
            let b = term.beta * r;
            let (_, p) = marcum_pair(a, b);
            let d = b - a;
            let log_deriv = (term.beta * term.beta * r).ln() - 0.5 * d * d + i0_scaled(a * b).ln();
            let log_p = if p > 0.0 {
                log_all += p.ln();
                p.ln()
            } else {
                zeros += 1;
                zero_at = Some(i);
                f64::NEG_INFINITY
            };
            logs.push((log_p, log_deriv));
        }
        match zeros {
            0 => logs
                .iter()
                .map(|&(lp, ld)| (log_all - lp + ld - t).exp())
                .sum(),
            1 => {
                let i = zero_at.unwrap_or(0);
                (log_all + logs[i].1 - t).exp()
            }
            _ => 0.0,
        }
    }

    /// Integral of the density out to where the union tail bound drops below
    /// `1e-17`, so truncation does not show up in the normalisation check.
    pub fn pdf_mass(&self) -> Result<f64> {
        let spec = QuadratureSpec::default().with_tolerances(1e-15, 1e-12)?;
        let r_end = self.sigma * (self.ports() as f64 / 1e-17).ln().sqrt();
        Ok(integrate(|r| self.pdf(r).unwrap_or(f64::NAN), 0.0, r_end, &spec)?.value)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(FasError::domain(format!("radius {r} must be finite and non-negative")))
    }
}

/// Sorted non-negative samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(FasError::domain("empirical distribution needs at least one sample"));
        }
        if samples.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(FasError::domain("samples must be finite and non-negative"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `<= r`.
    pub fn cdf(&self, r: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= r) as f64 / self.sorted.len() as f64
    }

    /// Freedman–Diaconis histogram as `(left edges, bin width, densities)`.
    pub fn histogram(&self) -> Histogram {
        let n = self.sorted.len();
        let lo = self.sorted[0];
        let hi = self.sorted[n - 1];
        let iqr = quantile(&self.sorted, 0.75) - quantile(&self.sorted, 0.25);
        let mut width = 2.0 * iqr / (n as f64).cbrt();
        if width.is_nan() || width <= 0.0 {
            width = ((hi - lo) / (n as f64).sqrt().ceil()).max(f64::MIN_POSITIVE);
        }
        let bins = (((hi - lo) / width).floor() as usize + 1).max(1);
        let mut counts = vec![0usize; bins];
        for &s in &self.sorted {
            let idx = (((s - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let densities = counts
            .into_iter()
            .map(|c| c as f64 / (n as f64 * width))
            .collect();
        Histogram { start: lo, width, densities }
    }
}

/// Histogram density estimate on equal-width bins starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub start: f64,
    pub width: f64,
    pub densities: Vec<f64>,
}

impl Histogram {
    /// Density of the bin containing `r`, zero outside the sampled range.
    pub fn density_at(&self, r: f64) -> f64 {
        if r < self.start {
            return 0.0;
        }
        let idx = ((r - self.start) / self.width) as usize;
        self.densities.get(idx).copied().unwrap_or(0.0)
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

/// Fraction of `samples` at or below `r`.
pub fn empirical_cdf(samples: &EmpiricalDistribution, r: f64) -> f64 {
    samples.cdf(r)
}

/// Piecewise cubic Hermite interpolant of the analytic CDF on `[0, r_max]`,
/// built from exact CDF and density values at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    step: f64,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
    max_error: f64,
}

impl CdfTable {
    /// Starts from `initial_nodes` panels and doubles until the interpolant matches
    /// the exact CDF at every panel midpoint to `tolerance`.
    pub fn build(dist: &AmplitudeDistribution, initial_nodes: usize, tolerance: f64) -> Result<Self> {
        if initial_nodes < 2 || tolerance.is_nan() || tolerance <= 0.0 {
            return Err(FasError::domain("CDF table needs at least two panels and a positive tolerance"));
        }
        let r_max = dist.truncation_radius();
        let mut panels = initial_nodes;
        loop {
            let step = r_max / panels as f64;
            let values = (0..=panels)
                .into_par_iter()
                .map(|i| {
                    let r = i as f64 * step;
                    Ok((dist.cdf(r)?, dist.pdf(r)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let (cdf, pdf) = values.into_iter().unzip();
            let mut table = Self { step, cdf, pdf, max_error: 0.0 };
            let max_error = (0..panels)
                .into_par_iter()
                .map(|i| {
                    let r = (i as f64 + 0.5) * step;
                    Ok((table.eval(r) - dist.cdf(r)?).abs())
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            table.max_error = max_error;
            if max_error <= tolerance {
                return Ok(table);
            }
            if panels >= 1 << 16 {
                return Err(FasError::Convergence {
                    estimate: max_error,
                    error_estimate: max_error,
                });
            }
            panels *= 2;
        }
    }

    pub fn nodes(&self) -> usize {
        self.cdf.len()
    }

    /// Largest midpoint interpolation error seen while building.
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let x = r / self.step;
        let last = self.cdf.len() - 1;
        if x >= last as f64 {
            return 1.0;
        }
        let i = x as usize;
        let u = x - i as f64;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let v = h00 * self.cdf[i]
            + h10 * self.step * self.pdf[i]
            + h01 * self.cdf[i + 1]
            + h11 * self.step * self.pdf[i + 1];
        v.clamp(0.0, 1.0)
    }
}

/// Tolerance of the interpolated CDF used by [`ks_distance`].
pub const KS_TABLE_TOLERANCE: f64 = 1e-7;

/// Kolmogorov–Smirnov distance between the samples and the analytic law,
/// checked on both sides of every step. The CDF is interpolated from a table
/// accurate to [`KS_TABLE_TOLERANCE`].
pub fn ks_distance(samples: &EmpiricalDistribution, dist: &AmplitudeDistribution) -> Result<f64> {
    let table = CdfTable::build(dist, 256, KS_TABLE_TOLERANCE)?;
    ks_distance_with(samples, |r| Ok(table.eval(r)))
}

/// KS distance against an arbitrary CDF.
pub fn ks_distance_with<F>(samples: &EmpiricalDistribution, mut cdf: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = samples.len() as f64;
    let mut worst: f64 = 0.0;
    let s = samples.samples();
    let mut i = 0;
    while i < s.len() {
        // Ties share one step.
        let mut j = i + 1;
        while j < s.len() && s[j] == s[i] {
            j += 1;
        }
        let f = cdf(s[i])?;
        worst = worst.max((j as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = j;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_port_is_rayleigh() {
        let d = AmplitudeDistribution::independent(1.3, 1).unwrap();
        for r in [0.1, 0.7, 1.5, 4.0] {
            let t = (r / 1.3f64).powi(2);
            assert!((d.cdf(r).unwrap() - (1.0 - (-t).exp())).abs() < 1e-15);
            let pdf = 2.0 * r / (1.3 * 1.3) * (-t).exp();
            assert!((d.pdf(r).unwrap() - pdf).abs() < 1e-15);
        }
        assert_eq!(d.cdf(0.0).unwrap(), 0.0);
    }

    #[test]
    fn independent_ports_give_power_of_rayleigh_cdf() {
        let d = AmplitudeDistribution::independent(1.0, 6).unwrap();
        for r in [0.3f64, 1.0, 2.0] {
            let want = (1.0 - (-r * r).exp()).powi(6);
            assert!((d.cdf(r).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_unit_correlation() {
        assert!(AmplitudeDistribution::new(1.0, vec![1.0], QuadratureSpec::default()).is_err());
        assert!(AmplitudeDistribution::new(1.0, vec![0.5], QuadratureSpec::default()).is_ok());
        assert!(AmplitudeDistribution::new(0.0, vec![], QuadratureSpec::default()).is_err());
    }

    #[test]
    fn empirical_cdf_steps() {
        let e = EmpiricalDistribution::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(empirical_cdf(&e, 0.5), 0.0);
        assert_eq!(empirical_cdf(&e, 2.0), 2.0 / 3.0);
        assert_eq!(empirical_cdf(&e, 10.0), 1.0);
        assert!(EmpiricalDistribution::new(vec![]).is_err());
        assert!(EmpiricalDistribution::new(vec![-1.0]).is_err());
    }

    #[test]
    fn ks_single_sample_at_median() {
        let d = AmplitudeDistribution::independent(1.0, 1).unwrap();
        let median = (2.0f64.ln()).sqrt();
        let e = EmpiricalDistribution::new(vec![median]).unwrap();
        assert!((ks_distance(&e, &d).unwrap() - 0.5).abs() <= KS_TABLE_TOLERANCE);
    }

    #[test]
    fn cdf_table_tracks_exact_cdf() {
        let d = AmplitudeDistribution::new(1.0, vec![0.9, 0.4, -0.2], QuadratureSpec::default()).unwrap();
        let table = CdfTable::build(&d, 16, 1e-8).unwrap();
        assert!(table.max_error() <= 1e-8);
        for i in 0..57 {
            let r = 0.013 + i as f64 * 0.1;
            assert!((table.eval(r) - d.cdf(r).unwrap()).abs() < 1e-8, "r={r}");
        }
        assert_eq!(table.eval(0.0), 0.0);
        assert_eq!(table.eval(1e3), 1.0);
    }

    #[test]
    fn histogram_integrates_to_one() {
        let samples: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.618).fract() * 3.0).collect();
        let h = EmpiricalDistribution::new(samples).unwrap().histogram();
        let mass: f64 = h.densities.iter().sum::<f64>() * h.width;
        assert!((mass - 1.0).abs() < 1e-12);
        assert_eq!(h.density_at(-1.0), 0.0);
    }
}

//! Chernoff/union BLER bound for single-RF-chain FAS, its analytic and Monte
//! Carlo expectations over the best-port amplitude, and the MRC benchmark.

use std::cell::RefCell;
use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::channel::CorrelationSpec;
use crate::error::{FasError, Result};
use crate::montecarlo::{block_moments, sample_fas_amplitudes};
use crate::special_functions::{gaussian_q, integrate_breakpoints, QuadratureSpec};
use crate::statistics::AmplitudeDistribution;

/// How the log union weight `ln |W|` for `U'` errors is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnionWeight {
    /// `sum_{i=1}^{U'-1} 2 ln((U-i)/(U'-i))`
    #[default]
    PaperSum,
    /// `2 ln C(U, U')`
    ExactLogBinomial,
}

impl UnionWeight {
    pub fn name(&self) -> &'static str {
        match self {
            UnionWeight::PaperSum => "paper",
            UnionWeight::ExactLogBinomial => "exact",
        }
    }
}

pub fn log_union_weight(users: u32, errors: u32, mode: UnionWeight) -> Result<f64> {
    if errors > users {
        return Err(FasError::domain(format!("U' = {errors} exceeds U = {users}")));
    }
    let (u, e) = (users as f64, errors as f64);
    Ok(match mode {
        UnionWeight::PaperSum => (1..errors.max(1))
            .map(|i| 2.0 * ((u - i as f64) / (e - i as f64)).ln())
            .sum(),
        UnionWeight::ExactLogBinomial => {
            if errors == 0 || errors == users {
                0.0
            } else {
                2.0 * (libm::lgamma(u + 1.0) - libm::lgamma(e + 1.0) - libm::lgamma(u - e + 1.0))
            }
        }
    })
}

/// Finite-blocklength link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of active users / candidate codewords `U`.
    pub users: u32,
    /// Blocklength `M`.
    pub blocklength: u32,
    /// `SNR = sigma² / sigma_eta²` in dB.
    pub snr_db: f64,
    pub sigma: f64,
    #[serde(default)]
    pub union_weight: UnionWeight,
}

impl SystemConfig {
    pub fn new(users: u32, blocklength: u32, snr_db: f64, sigma: f64) -> Result<Self> {
        let cfg = Self {
            users,
            blocklength,
            snr_db,
            sigma,
            union_weight: UnionWeight::PaperSum,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_union_weight(mut self, mode: UnionWeight) -> Self {
        self.union_weight = mode;
        self
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.users < 1 {
            return Err(FasError::domain("need at least one user"));
        }
        if self.blocklength < 1 {
            return Err(FasError::domain("blocklength must be at least one"));
        }
        if !self.snr_db.is_finite() {
            return Err(FasError::domain("SNR must be finite"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(FasError::domain("sigma must be positive and finite"));
        }
        Ok(())
    }

    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Noise energy `sigma_eta² = sigma² / SNR`.
    pub fn sigma_eta_sq(&self) -> f64 {
        self.sigma * self.sigma / self.snr_linear()
    }

    /// Codeword element variance; unit-norm codewords fix it to `1/M`.
    pub fn sigma_c_sq(&self) -> f64 {
        1.0 / self.blocklength as f64
    }
}

/// Conventional receiver with `L` antennas and MRC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub antennas: u32,
    pub system: SystemConfig,
}

impl BenchmarkConfig {
    pub fn new(antennas: u32, system: SystemConfig) -> Result<Self> {
        if antennas < 1 {
            return Err(FasError::domain("need at least one antenna"));
        }
        system.validate()?;
        Ok(Self { antennas, system })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlerMethod {
    AnalyticIntegral,
    MonteCarlo,
    ClosedForm,
}

impl BlerMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BlerMethod::AnalyticIntegral => "analytic",
            BlerMethod::MonteCarlo => "empirical",
            BlerMethod::ClosedForm => "closed_form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlerResult {
    pub value: f64,
    pub method: BlerMethod,
    /// Standard error of the Monte Carlo mean (0 for deterministic methods).
    pub mc_std_error: f64,
    /// Quadrature error estimate (0 for Monte Carlo and closed forms).
    pub quadrature_error: f64,
    pub samples_used: u64,
}

impl BlerResult {
    /// Error budget used when comparing two results.
    pub fn error_budget(&self) -> f64 {
        self.mc_std_error + self.quadrature_error
    }
}

/// The conditional bound as a function of the selected amplitude `r`:
///
/// `sum_{U'=1}^{U} (U'/U) exp(L' - M ln(1 + 0.25 M sigma_eta'² / sigma_eta²))`,
/// `sigma_eta'² = 2 U' sigma_c² r²`. The `U' = 0` term carries a zero prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct ChernoffBound {
    /// `(ln(U'/U) + L', coefficient of r² inside the log1p)` per `U' >= 1`.
    terms: Vec<(f64, f64)>,
    blocklength: f64,
}

impl ChernoffBound {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.blocklength as f64;
        let u = cfg.users as f64;
        // The optimal Chernoff parameter lambda = M / (2 sigma_eta²) turns each
        // term into (1 + 0.25 M sigma_eta'² / sigma_eta²)^(-M).
        let per_r2 = 0.25 * m * 2.0 * cfg.sigma_c_sq() / cfg.sigma_eta_sq();
        let terms = (1..=cfg.users)
            .map(|e| {
                let weight = log_union_weight(cfg.users, e, cfg.union_weight)?;
                Ok(((e as f64 / u).ln() + weight, per_r2 * e as f64))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { terms, blocklength: m })
    }

    /// Natural log of the unclamped sum (log-sum-exp over `U'`).
    pub fn log_raw(&self, r: f64) -> f64 {
        let r2 = r * r;
        let exps = self
            .terms
            .iter()
            .map(|&(c0, c1)| c0 - self.blocklength * (c1 * r2).ln_1p());
        let max = exps.clone().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + exps.map(|e| (e - max).exp()).sum::<f64>().ln()
    }

    pub fn raw(&self, r: f64) -> f64 {
        self.log_raw(r).exp()
    }

    /// `min(1, raw)`.
    pub fn clamped(&self, r: f64) -> f64 {
        let l = self.log_raw(r);
        if l >= 0.0 {
            1.0
        } else {
            l.exp()
        }
    }

    /// Smallest `r` at which the raw bound drops to one (0 if it never exceeds one).
    pub fn saturation_radius(&self) -> f64 {
        if self.log_raw(0.0) <= 0.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.log_raw(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e150 {
                return hi;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.log_raw(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// BLER bound for a known best-port amplitude `r`, clamped to one.
pub fn conditional_bler_bound(cfg: &SystemConfig, r: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(FasError::domain(format!("amplitude {r} must be finite and non-negative")));
    }
    Ok(ChernoffBound::new(cfg)?.clamped(r))
}

/// Outer-integral tolerances: relative only, since the bound spans hundreds of decades.
fn outer_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        absolute_tolerance: 1e-300,
        relative_tolerance: 1e-8,
        max_subdivisions: 2000,
        fixed_node_count: 64,
    }
}

/// Initial panels for the outer integral so narrow peaks near `r = 0` are resolved.
const OUTER_PANELS: usize = 12;

/// Expectation of the clamped conditional bound under the analytic amplitude law.
///
/// On `[0, r*]`, where the raw bound exceeds one, the integrand is the density
/// itself and the piece equals `C(r*)`; beyond it the density is integrated
/// against the bound up to the tail-truncation radius.
pub fn analytic_bler_bound(cfg: &SystemConfig, dist: &AmplitudeDistribution) -> Result<BlerResult> {
    let bound = ChernoffBound::new(cfg)?;
    let r_max = dist.truncation_radius();
    let r_sat = bound.saturation_radius().min(r_max);
    let saturated = if r_sat > 0.0 { dist.cdf(r_sat)? } else { 0.0 };

    let failure = RefCell::new(None);
    let integrand = |r: f64| match dist.pdf(r) {
        Ok(p) => p * bound.clamped(r),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let breaks: Vec<f64> = (0..=OUTER_PANELS)
        .map(|i| r_sat + (r_max - r_sat) * i as f64 / OUTER_PANELS as f64)
        .collect();
    let tail = if r_max > r_sat {
        integrate_breakpoints(integrand, &breaks, &outer_quadrature())?
    } else {
        crate::special_functions::Integral { value: 0.0, error_estimate: 0.0 }
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let value = saturated + tail.value;
    let inner_rel = dist.quadrature().relative_tolerance;
    Ok(BlerResult {
        value: value.clamp(0.0, 1.0),
        method: BlerMethod::AnalyticIntegral,
        mc_std_error: 0.0,
        quadrature_error: tail.error_estimate + inner_rel * value.abs(),
        samples_used: 0,
    })
}

/// `min(1, int pdf(r) * raw(r) dr)`: the expectation of the unclamped bound.
pub fn analytic_bler_bound_unclamped(cfg: &SystemConfig, dist: &AmplitudeDistribution) -> Result<BlerResult> {
    let bound = ChernoffBound::new(cfg)?;
    let r_max = dist.truncation_radius();
    let failure = RefCell::new(None);
    let integrand = |r: f64| match dist.pdf(r) {
        Ok(p) => p * bound.raw(r),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let breaks: Vec<f64> = (0..=OUTER_PANELS)
        .map(|i| r_max * i as f64 / OUTER_PANELS as f64)
        .collect();
    let integral = integrate_breakpoints(integrand, &breaks, &outer_quadrature())?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(BlerResult {
        value: integral.value.clamp(0.0, 1.0),
        method: BlerMethod::AnalyticIntegral,
        mc_std_error: 0.0,
        quadrature_error: integral.error_estimate,
        samples_used: 0,
    })
}

/// Minimum number of draws accepted by [`empirical_bler_bound`].
pub const MIN_MC_SAMPLES: usize = 100;

/// Monte Carlo mean of the clamped conditional bound over sampled channels.
pub fn empirical_bler_bound(
    cfg: &SystemConfig,
    spec: &CorrelationSpec,
    n_samples: usize,
    seed: u64,
) -> Result<BlerResult> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(FasError::domain(format!(
            "need at least {MIN_MC_SAMPLES} Monte Carlo samples, got {n_samples}"
        )));
    }
    let amplitudes = sample_fas_amplitudes(spec, n_samples, seed);
    empirical_bler_from_amplitudes(cfg, &amplitudes)
}

/// Monte Carlo mean of the clamped conditional bound over given amplitude draws.
pub fn empirical_bler_from_amplitudes(cfg: &SystemConfig, amplitudes: &[f64]) -> Result<BlerResult> {
    if amplitudes.is_empty() {
        return Err(FasError::domain("no amplitude samples"));
    }
    let bound = ChernoffBound::new(cfg)?;
    let m = block_moments(amplitudes, |r| bound.clamped(r));
    Ok(BlerResult {
        value: m.mean.clamp(0.0, 1.0),
        method: BlerMethod::MonteCarlo,
        mc_std_error: m.std_error(),
        quadrature_error: 0.0,
        samples_used: m.count,
    })
}

/// Post-MRC SINR `4 L³ sigma² / (pi (U-1) sigma² + 4 L² sigma_eta²)`.
pub fn conventional_sinr(bench: &BenchmarkConfig) -> f64 {
    let l = bench.antennas as f64;
    let s2 = bench.system.sigma * bench.system.sigma;
    let interference = std::f64::consts::PI * (bench.system.users as f64 - 1.0) * s2;
    4.0 * l.powi(3) * s2 / (interference + 4.0 * l * l * bench.system.sigma_eta_sq())
}

/// Normal-approximation BLER `Q((C - R_c) / sqrt(V / M))` at the post-MRC SINR.
pub fn conventional_bler(bench: &BenchmarkConfig) -> Result<f64> {
    bench.system.validate()?;
    bler_at_sinr(
        conventional_sinr(bench),
        bench.system.users,
        bench.system.blocklength,
    )
}

/// Normal approximation at a given SINR. With zero SINR the dispersion vanishes:
/// the result is 1 for a positive code rate and 1/2 otherwise.
pub fn bler_at_sinr(sinr: f64, users: u32, blocklength: u32) -> Result<f64> {
    if sinr.is_nan() || sinr < 0.0 {
        return Err(FasError::domain(format!("SINR {sinr} must be non-negative")));
    }
    let m = blocklength as f64;
    let rate = (users as f64).log2() / m;
    if sinr == 0.0 {
        return Ok(if rate > 0.0 { 1.0 } else { 0.5 });
    }
    let capacity = 0.5 * sinr.ln_1p() * LOG2_E;
    let dispersion = 0.5 * sinr * (sinr + 2.0) / (sinr + 1.0).powi(2) * LOG2_E * LOG2_E;
    gaussian_q((capacity - rate) / (dispersion / m).sqrt())
}

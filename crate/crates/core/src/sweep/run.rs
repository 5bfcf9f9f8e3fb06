use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bler::{
    analytic_bler_bound, conventional_bler, empirical_bler_from_amplitudes, BenchmarkConfig, BlerMethod,
    BlerResult, SystemConfig,
};
use crate::channel::{CorrelationModel, CorrelationSpec, PortGrid};
use crate::error::{FasError, Result};
use crate::montecarlo::{derive_seed, sample_fas_amplitudes};
use crate::statistics::{ks_distance, AmplitudeDistribution, EmpiricalDistribution};

use super::spec::{AxisName, Experiment, Method, SweepSpec};

/// One plotted line: BLER against the swept axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlerCurve {
    pub label: String,
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub bler: Vec<f64>,
    /// Monte Carlo standard error, or the quadrature error estimate for analytic points.
    pub std_err: Vec<f64>,
    pub method: Vec<BlerMethod>,
}

impl BlerCurve {
    fn new(label: String, axis_name: &str) -> Self {
        Self {
            label,
            axis_name: axis_name.to_string(),
            axis: Vec::new(),
            bler: Vec::new(),
            std_err: Vec::new(),
            method: Vec::new(),
        }
    }

    fn push(&mut self, x: f64, r: &BlerResult) {
        self.axis.push(x);
        self.bler.push(r.value);
        self.std_err.push(r.error_budget());
        self.method.push(r.method);
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }
}

/// Fixed `(model, N, W)` choice; `None` means the value comes from the axis.
#[derive(Debug, Clone, Copy)]
struct Family {
    model: CorrelationModel,
    ports: Option<usize>,
    aperture: Option<f64>,
}

fn families(spec: &SweepSpec, axis: Option<AxisName>) -> Vec<Family> {
    let ports: Vec<Option<usize>> = if axis == Some(AxisName::Ports) {
        vec![None]
    } else {
        spec.ports.iter().copied().map(Some).collect()
    };
    let apertures: Vec<Option<f64>> = if axis == Some(AxisName::Aperture) {
        vec![None]
    } else {
        spec.apertures.iter().copied().map(Some).collect()
    };
    let mut out = Vec::new();
    for &model in &spec.models {
        for &n in &ports {
            for &w in &apertures {
                out.push(Family { model, ports: n, aperture: w });
            }
        }
    }
    out
}

fn format_number(x: f64) -> String {
    format!("{x}")
}

fn family_label(spec: &SweepSpec, f: &Family, method: Method) -> String {
    let mut label = format!(
        "{} {}",
        f.model.name(),
        match method {
            Method::Analytic => "analytic",
            Method::Empirical => "empirical",
        }
    );
    if let Some(n) = f.ports {
        label.push_str(&format!(" N={n}"));
    }
    if let Some(w) = f.aperture {
        label.push_str(&format!(" W={}", format_number(w)));
    }
    label.push_str(&format!(" weight={}", spec.union_weight.name()));
    label
}

/// One structural point of a family: the channel is fixed, SNR may vary.
struct Group {
    family: usize,
    /// Index into the axis grid (0 when SNR is swept).
    point: usize,
    grid: PortGrid,
}

fn system(spec: &SweepSpec, snr_db: f64) -> Result<SystemConfig> {
    Ok(SystemConfig::new(spec.users, spec.blocklength, snr_db, spec.sigma)?.with_union_weight(spec.union_weight))
}

/// Runs a BLER sweep. Curves come out as: for each `(model, N, W)` family, one per
/// requested method; then one conventional-benchmark curve per antenna count.
/// Empirical groups draw from `derive_seed(seed, group ordinal)`, where the
/// ordinal is the grid position, so results do not depend on thread count.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<BlerCurve>> {
    spec.validate()?;
    let axis = spec
        .axis
        .as_ref()
        .ok_or_else(|| FasError::config(format!("experiment {:?} has no swept axis", spec.experiment)))?;
    if matches!(spec.experiment, Experiment::DistCurves | Experiment::Validate) {
        return Err(FasError::config("run_sweep handles BLER experiments only"));
    }
    let fams = families(spec, Some(axis.name));
    let snr_grid = spec.snr_grid();
    let points_per_family = if axis.name == AxisName::SnrDb { 1 } else { axis.values.len() };

    let mut groups = Vec::new();
    for (fi, f) in fams.iter().enumerate() {
        for p in 0..points_per_family {
            let (n, w) = match axis.name {
                AxisName::Ports => (axis.values[p] as usize, f.aperture.unwrap_or(1.0)),
                AxisName::Aperture => (f.ports.unwrap_or(1), axis.values[p]),
                AxisName::SnrDb => (f.ports.unwrap_or(1), f.aperture.unwrap_or(1.0)),
            };
            groups.push(Group { family: fi, point: p, grid: PortGrid::new(n, w)? });
        }
    }

    // Per group: per method, the results at every SNR of the grid.
    let results: Vec<Vec<(Method, Vec<BlerResult>)>> = groups
        .par_iter()
        .enumerate()
        .map(|(ordinal, g)| {
            let f = &fams[g.family];
            let cspec = CorrelationSpec::new(f.model, g.grid, spec.sigma, spec.sinc)?;
            let mut out = Vec::new();
            for &method in &spec.methods {
                let values = match method {
                    Method::Analytic => {
                        let dist = AmplitudeDistribution::from_spec(&cspec)?;
                        snr_grid
                            .par_iter()
                            .map(|&snr| analytic_bler_bound(&system(spec, snr)?, &dist))
                            .collect::<Result<Vec<_>>>()?
                    }
                    Method::Empirical => {
                        let amps = sample_fas_amplitudes(&cspec, spec.mc_samples, derive_seed(spec.seed, ordinal as u64));
                        snr_grid
                            .iter()
                            .map(|&snr| empirical_bler_from_amplitudes(&system(spec, snr)?, &amps))
                            .collect::<Result<Vec<_>>>()?
                    }
                };
                out.push((method, values));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut curves = Vec::new();
    for (fi, f) in fams.iter().enumerate() {
        for (mi, &method) in spec.methods.iter().enumerate() {
            let mut curve = BlerCurve::new(family_label(spec, f, method), axis.name.name());
            for (g, res) in groups.iter().zip(&results).filter(|(g, _)| g.family == fi) {
                let per_snr = &res[mi].1;
                if axis.name == AxisName::SnrDb {
                    for (x, r) in axis.values.iter().zip(per_snr) {
                        curve.push(*x, r);
                    }
                } else {
                    curve.push(axis.values[g.point], &per_snr[0]);
                }
            }
            curves.push(curve);
        }
    }

    for &l in &spec.benchmark_antennas {
        let mut curve = BlerCurve::new(format!("conventional L={l}"), axis.name.name());
        for (p, &x) in axis.values.iter().enumerate() {
            let snr = if axis.name == AxisName::SnrDb { snr_grid[p] } else { snr_grid[0] };
            let bench = BenchmarkConfig::new(l, system(spec, snr)?)?;
            let value = conventional_bler(&bench)?;
            curve.push(
                x,
                &BlerResult {
                    value,
                    method: BlerMethod::ClosedForm,
                    mc_std_error: 0.0,
                    quadrature_error: 0.0,
                    samples_used: 0,
                },
            );
        }
        curves.push(curve);
    }
    Ok(curves)
}

/// Analytic and empirical law of `|g_FAS|` on a grid of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistTable {
    pub label: String,
    pub samples: usize,
    pub r: Vec<f64>,
    pub analytic_cdf: Vec<f64>,
    pub empirical_cdf: Vec<f64>,
    pub analytic_pdf: Vec<f64>,
    pub histogram_pdf: Vec<f64>,
}

impl DistTable {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

fn single_case(spec: &SweepSpec) -> Result<(CorrelationModel, usize, f64)> {
    if spec.models.len() != 1 || spec.ports.len() != 1 || spec.apertures.len() != 1 {
        return Err(FasError::config(
            "distribution curves need exactly one model, one port count and one aperture",
        ));
    }
    Ok((spec.models[0], spec.ports[0], spec.apertures[0]))
}

/// Distribution curves on `dist_points` radii from 0 to the largest sampled amplitude.
pub fn run_dist(spec: &SweepSpec) -> Result<DistTable> {
    spec.validate()?;
    if spec.experiment != Experiment::DistCurves {
        return Err(FasError::config("run_dist needs a dist_curves experiment"));
    }
    let (model, n, w) = single_case(spec)?;
    let analytic = CorrelationSpec::new(model, PortGrid::new(n, w)?, spec.sigma, spec.sinc)?;
    let sampler = sampler_spec(spec, &analytic)?;
    let dist = AmplitudeDistribution::from_spec(&analytic)?;
    let samples = EmpiricalDistribution::new(sample_fas_amplitudes(&sampler, spec.mc_samples, derive_seed(spec.seed, 0)))?;
    let hist = samples.histogram();
    let r_hi = samples.samples().last().copied().unwrap_or(0.0);
    let r: Vec<f64> = (0..spec.dist_points)
        .map(|i| r_hi * i as f64 / (spec.dist_points - 1) as f64)
        .collect();
    let analytic_values = r
        .par_iter()
        .map(|&x| Ok((dist.cdf(x)?, dist.pdf(x)?)))
        .collect::<Result<Vec<_>>>()?;
    let (analytic_cdf, analytic_pdf) = analytic_values.into_iter().unzip();
    Ok(DistTable {
        label: format!("{} N={n} W={}", model.name(), format_number(w)),
        samples: spec.mc_samples,
        empirical_cdf: r.iter().map(|&x| samples.cdf(x)).collect(),
        histogram_pdf: r.iter().map(|&x| hist.density_at(x)).collect(),
        analytic_cdf,
        analytic_pdf,
        r,
    })
}

fn sampler_spec(spec: &SweepSpec, analytic: &CorrelationSpec) -> Result<CorrelationSpec> {
    match spec.sampler_aperture {
        Some(w) => CorrelationSpec::new(
            analytic.model(),
            PortGrid::new(analytic.grid().ports(), w)?,
            spec.sigma,
            spec.sinc,
        ),
        None => Ok(analytic.clone()),
    }
}

pub const KS_THRESHOLD: f64 = 0.01;
pub const PDF_MASS_THRESHOLD: f64 = 1e-6;
pub const BLER_DEVIATION_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCase {
    pub label: String,
    pub ks_distance: f64,
    pub pdf_mass_residual: f64,
    /// Largest `|analytic - empirical| / (combined error)` over the SNR grid.
    pub bler_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub cases: Vec<ValidationCase>,
    pub ks_distance: f64,
    pub pdf_mass_residual: f64,
    pub bler_deviation: f64,
    pub ks_threshold: f64,
    pub pdf_mass_threshold: f64,
    pub bler_deviation_threshold: f64,
    pub passed: bool,
}

/// Deviation between two results in units of their combined error.
pub fn deviation_in_errors(a: &BlerResult, b: &BlerResult) -> f64 {
    let diff = (a.value - b.value).abs();
    let budget = a.error_budget() + b.error_budget();
    if diff == 0.0 {
        0.0
    } else if budget == 0.0 {
        f64::INFINITY
    } else {
        diff / budget
    }
}

/// Checks the analytic law against Monte Carlo for every `(model, N, W)` case:
/// KS distance, density normalisation and BLER agreement over the SNR grid.
pub fn validate(spec: &SweepSpec) -> Result<ValidationReport> {
    spec.validate()?;
    if spec.axis.as_ref().is_some_and(|a| a.name != AxisName::SnrDb) {
        return Err(FasError::config("validation sweeps SNR only"));
    }
    let fams = families(spec, None);
    let snr_grid = spec.snr_grid();
    let cases = fams
        .par_iter()
        .enumerate()
        .map(|(ordinal, f)| {
            let (n, w) = (f.ports.unwrap_or(1), f.aperture.unwrap_or(1.0));
            let analytic = CorrelationSpec::new(f.model, PortGrid::new(n, w)?, spec.sigma, spec.sinc)?;
            let sampler = sampler_spec(spec, &analytic)?;
            let dist = AmplitudeDistribution::from_spec(&analytic)?;
            let amps = sample_fas_amplitudes(&sampler, spec.mc_samples, derive_seed(spec.seed, ordinal as u64));
            let mut bler_deviation: f64 = 0.0;
            for &snr in &snr_grid {
                let cfg = system(spec, snr)?;
                let a = analytic_bler_bound(&cfg, &dist)?;
                let e = empirical_bler_from_amplitudes(&cfg, &amps)?;
                bler_deviation = bler_deviation.max(deviation_in_errors(&a, &e));
            }
            let samples = EmpiricalDistribution::new(amps)?;
            Ok(ValidationCase {
                label: format!("{} N={n} W={}", f.model.name(), format_number(w)),
                ks_distance: ks_distance(&samples, &dist)?,
                pdf_mass_residual: (dist.pdf_mass()? - 1.0).abs(),
                bler_deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = |g: fn(&ValidationCase) -> f64| cases.iter().map(g).fold(0.0, f64::max);
    let ks = worst(|c| c.ks_distance);
    let mass = worst(|c| c.pdf_mass_residual);
    let dev = worst(|c| c.bler_deviation);
    Ok(ValidationReport {
        passed: ks < KS_THRESHOLD && mass < PDF_MASS_THRESHOLD && dev <= BLER_DEVIATION_THRESHOLD,
        cases,
        ks_distance: ks,
        pdf_mass_residual: mass,
        bler_deviation: dev,
        ks_threshold: KS_THRESHOLD,
        pdf_mass_threshold: PDF_MASS_THRESHOLD,
        bler_deviation_threshold: BLER_DEVIATION_THRESHOLD,
    })
}

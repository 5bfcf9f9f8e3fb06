use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bler::{UnionWeight, MIN_MC_SAMPLES};
use crate::channel::{CorrelationModel, SincConvention};
use crate::error::{FasError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    DistCurves,
    BlerVsSnr,
    BlerVsN,
    BlerVsW,
    ModelComparison,
    Validate,
}

/// How the FAS bound is averaged over the selected amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    SnrDb,
    Ports,
    Aperture,
}

impl AxisName {
    pub fn name(&self) -> &'static str {
        match self {
            AxisName::SnrDb => "snr_db",
            AxisName::Ports => "ports",
            AxisName::Aperture => "aperture",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_dist_points() -> usize {
    200
}

/// One experiment, read from a JSON document.
///
/// `ports` and `apertures` list the fixed structural values; one curve is
/// produced per `(model, method, N, W)` combination. The swept axis replaces
/// the matching list (or `snr_db`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub models: Vec<CorrelationModel>,
    #[serde(default)]
    pub methods: Vec<Method>,
    pub users: u32,
    pub blocklength: u32,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub union_weight: UnionWeight,
    #[serde(default)]
    pub ports: Vec<usize>,
    #[serde(default)]
    pub apertures: Vec<f64>,
    #[serde(default)]
    pub benchmark_antennas: Vec<u32>,
    #[serde(default)]
    pub axis: Option<Axis>,
    pub mc_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub sinc: SincConvention,
    /// Aperture used by the sampler instead of the analytic one (validation control).
    #[serde(default)]
    pub sampler_aperture: Option<f64>,
    /// Number of `r` points in distribution tables.
    #[serde(default = "default_dist_points")]
    pub dist_points: usize,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let spec: SweepSpec =
            serde_json::from_value(value).map_err(|e| FasError::config(format!("invalid sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Parses `text`, applies `key=value` overrides to the JSON tree, then validates.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(FasError::config("at least one model is required"));
        }
        if self.users < 1 || self.blocklength < 1 {
            return Err(FasError::config("users and blocklength must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(FasError::config("sigma must be positive and finite"));
        }
        if let Some(axis) = &self.axis {
            if axis.values.is_empty() {
                return Err(FasError::config("swept axis grid is empty"));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(FasError::config("swept axis grid has non-finite values"));
            }
            if axis.values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(FasError::config("swept axis grid must be strictly increasing"));
            }
            if axis.name == AxisName::Ports && axis.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
                return Err(FasError::config("port axis values must be positive integers"));
            }
            if axis.name == AxisName::Aperture && axis.values.iter().any(|&v| v <= 0.0) {
                return Err(FasError::config("aperture axis values must be positive"));
            }
        }
        let axis_name = self.axis.as_ref().map(|a| a.name);
        let wanted = match self.experiment {
            Experiment::BlerVsSnr => Some(AxisName::SnrDb),
            Experiment::BlerVsN | Experiment::ModelComparison => Some(AxisName::Ports),
            Experiment::BlerVsW => Some(AxisName::Aperture),
            Experiment::DistCurves | Experiment::Validate => None,
        };
        if let Some(w) = wanted {
            if axis_name != Some(w) {
                return Err(FasError::config(format!(
                    "experiment {:?} needs a '{}' axis",
                    self.experiment,
                    w.name()
                )));
            }
        }
        if self.experiment == Experiment::DistCurves && self.axis.is_some() {
            return Err(FasError::config("distribution curves take no swept axis"));
        }
        if axis_name != Some(AxisName::Ports) && self.ports.is_empty() {
            return Err(FasError::config("'ports' must list at least one port count"));
        }
        if axis_name != Some(AxisName::Aperture) && self.apertures.is_empty() {
            return Err(FasError::config("'apertures' must list at least one aperture"));
        }
        if self.ports.contains(&0) {
            return Err(FasError::config("port counts must be positive"));
        }
        if self.apertures.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(FasError::config("apertures must be positive and finite"));
        }
        if axis_name != Some(AxisName::SnrDb) && self.snr_db.is_none() && self.needs_snr() {
            return Err(FasError::config("'snr_db' is required unless SNR is the swept axis"));
        }
        if self.benchmark_antennas.contains(&0) {
            return Err(FasError::config("benchmark antenna counts must be positive"));
        }
        if matches!(
            self.experiment,
            Experiment::BlerVsSnr | Experiment::BlerVsN | Experiment::BlerVsW | Experiment::ModelComparison
        ) && self.methods.is_empty()
            && self.benchmark_antennas.is_empty()
        {
            return Err(FasError::config("nothing to compute: no methods and no benchmark antennas"));
        }
        if self.methods.contains(&Method::Analytic) {
            if let Some(m) = self.models.iter().find(|m| !m.has_analytic_law()) {
                return Err(FasError::config(format!(
                    "the {} model has no analytic law; use the empirical method",
                    m.name()
                )));
            }
        }
        if matches!(self.experiment, Experiment::DistCurves | Experiment::Validate) {
            if let Some(m) = self.models.iter().find(|m| !m.has_analytic_law()) {
                return Err(FasError::config(format!(
                    "{:?} needs an analytic law, which the {} model lacks",
                    self.experiment,
                    m.name()
                )));
            }
        }
        let needs_mc = self.methods.contains(&Method::Empirical)
            || matches!(self.experiment, Experiment::DistCurves | Experiment::Validate);
        if needs_mc && self.mc_samples < MIN_MC_SAMPLES {
            return Err(FasError::config(format!(
                "mc_samples must be at least {MIN_MC_SAMPLES} for empirical results"
            )));
        }
        if let Some(w) = self.sampler_aperture {
            if !(w > 0.0 && w.is_finite()) {
                return Err(FasError::config("sampler_aperture must be positive and finite"));
            }
        }
        if self.experiment == Experiment::DistCurves && self.dist_points < 2 {
            return Err(FasError::config("dist_points must be at least 2"));
        }
        Ok(())
    }

    fn needs_snr(&self) -> bool {
        self.experiment != Experiment::DistCurves
    }

    /// SNR grid: the axis values when sweeping SNR, else the single fixed value.
    pub fn snr_grid(&self) -> Vec<f64> {
        match &self.axis {
            Some(a) if a.name == AxisName::SnrDb => a.values.clone(),
            _ => self.snr_db.into_iter().collect(),
        }
    }
}

/// Sets `path.to.key` in a JSON tree. The value is parsed as JSON when possible,
/// otherwise stored as a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| FasError::config(format!("override '{assignment}' is not key=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(FasError::config(format!("override '{assignment}' has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| FasError::config(format!("override '{path}': '{key}' is not inside an object")))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one key")
}

//! Port geometry, the three spatial-correlation models and correlated channel draws.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FasError, Result};
use crate::special_functions::{bessel_j0, bessel_j1, hyp1f2_term};

/// `N` ports evenly spaced over an aperture of `W` wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortGrid {
    ports: usize,
    aperture: f64,
}

impl PortGrid {
    pub fn new(ports: usize, aperture: f64) -> Result<Self> {
        if ports == 0 {
            return Err(FasError::domain("port grid needs at least one port"));
        }
        if !(aperture > 0.0 && aperture.is_finite()) {
            return Err(FasError::domain(format!("aperture {aperture} must be positive and finite")));
        }
        Ok(Self { ports, aperture })
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    /// Distance of port `k` (1-based) from port 1, in wavelengths.
    pub fn displacement(&self, k: usize) -> f64 {
        if self.ports == 1 {
            return 0.0;
        }
        (k - 1) as f64 / (self.ports - 1) as f64 * self.aperture
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationModel {
    SimpleReference,
    ModifiedReference,
    FullyCorrelated,
}

impl CorrelationModel {
    pub fn name(&self) -> &'static str {
        match self {
            CorrelationModel::SimpleReference => "simple_reference",
            CorrelationModel::ModifiedReference => "modified_reference",
            CorrelationModel::FullyCorrelated => "fully_correlated",
        }
    }

    /// Whether an analytic law of the selected amplitude exists for this model.
    pub fn has_analytic_law(&self) -> bool {
        !matches!(self, CorrelationModel::FullyCorrelated)
    }
}

/// Which `sinc` generates the Toeplitz covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SincConvention {
    /// `sin(x) / x`
    #[default]
    Unnormalized,
    /// `sin(pi x) / (pi x)`
    Normalized,
}

impl SincConvention {
    pub fn eval(&self, x: f64) -> f64 {
        let arg = match self {
            SincConvention::Unnormalized => x,
            SincConvention::Normalized => PI * x,
        };
        if arg == 0.0 {
            1.0
        } else {
            arg.sin() / arg
        }
    }
}

/// `mu_k = J0(2 pi (k-1) W / (N-1))`, correlation of port `k` with port 1.
pub fn mu_simple(k: usize, grid: &PortGrid) -> Result<f64> {
    if grid.ports() < 2 {
        return Err(FasError::DegenerateGrid(
            "a single port has no reference correlation".to_string(),
        ));
    }
    if k == 0 || k > grid.ports() {
        return Err(FasError::domain(format!("port index {k} outside 1..={}", grid.ports())));
    }
    bessel_j0(2.0 * PI * grid.displacement(k))
}

/// Unified correlation `sqrt(2) sqrt(1F2(1/2; 1, 3/2; -pi² W²) - J1(2 pi W) / (2 pi W))`.
pub fn mu_modified(grid: &PortGrid) -> Result<f64> {
    let w = grid.aperture();
    let x = 2.0 * PI * w;
    let radicand = hyp1f2_term(w)? - bessel_j1(x)? / x;
    if radicand < -1e-12 {
        return Err(FasError::NumericalInconsistency(format!(
            "modified-reference radicand {radicand:e} is negative at W = {w}"
        )));
    }
    let mu = std::f64::consts::SQRT_2 * radicand.max(0.0).sqrt();
    if mu > 1.0 + 1e-12 {
        return Err(FasError::NumericalInconsistency(format!(
            "modified-reference correlation {mu} exceeds one at W = {w}"
        )));
    }
    Ok(mu.min(1.0))
}

/// Toeplitz covariance `Sigma[i][j] = a(i - j)`, `a(n) = sinc(2 pi n W / (N - 1))`.
pub fn covariance_matrix(grid: &PortGrid, sinc: SincConvention) -> DMatrix<f64> {
    let n = grid.ports();
    let generator: Vec<f64> = (0..n)
        .map(|lag| {
            if lag == 0 {
                1.0
            } else {
                sinc.eval(2.0 * PI * lag as f64 * grid.aperture() / (n - 1) as f64)
            }
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| generator[i.abs_diff(j)])
}

/// Eigenvalues below this fraction of the largest are clamped to zero.
pub const EIGEN_CLAMP_RATIO: f64 = 1e-12;
/// Largest tolerated clamped eigen-mass as a fraction of the trace.
pub const MAX_CLAMPED_MASS: f64 = 1e-6;

/// `F = Q Lambda^{1/2}` restricted to the retained spectrum, so that `F F^T ≈ Sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactor {
    factor: DMatrix<f64>,
    clamped_mass: f64,
}

impl SpectralFactor {
    /// `N x r` matrix, `r` the retained rank.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// Total absolute eigenvalue mass discarded by clamping.
    pub fn clamped_mass(&self) -> f64 {
        self.clamped_mass
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }
}

pub fn spectral_factor(sigma_matrix: &DMatrix<f64>) -> Result<SpectralFactor> {
    let n = sigma_matrix.nrows();
    if n == 0 || sigma_matrix.ncols() != n {
        return Err(FasError::Model("covariance must be a non-empty square matrix".into()));
    }
    if sigma_matrix.iter().any(|v| !v.is_finite()) {
        return Err(FasError::Model("covariance has non-finite entries".into()));
    }
    let asym = (sigma_matrix - sigma_matrix.transpose()).abs().max();
    if asym > 1e-12 * sigma_matrix.abs().max().max(1.0) {
        return Err(FasError::Model(format!("covariance is not symmetric (max skew {asym:e})")));
    }
    let eigen = SymmetricEigen::try_new(sigma_matrix.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| FasError::Model("eigen-decomposition did not converge".into()))?;
    let lambda_max = eigen.eigenvalues.max();
    if lambda_max.is_nan() || lambda_max <= 0.0 {
        return Err(FasError::Model("covariance has no positive eigenvalue".into()));
    }
    let floor = EIGEN_CLAMP_RATIO * lambda_max;
    let trace = sigma_matrix.trace();
    let mut clamped_mass = 0.0;
    let mut columns = Vec::new();
    for (i, &lambda) in eigen.eigenvalues.iter().enumerate() {
        if lambda < floor {
            clamped_mass += lambda.abs();
        } else {
            columns.push(eigen.eigenvectors.column(i) * lambda.sqrt());
        }
    }
    if clamped_mass > MAX_CLAMPED_MASS * trace.abs() {
        return Err(FasError::Model(format!(
            "clamped eigenvalue mass {clamped_mass:e} exceeds {MAX_CLAMPED_MASS:e} of the trace"
        )));
    }
    Ok(SpectralFactor {
        factor: DMatrix::from_columns(&columns),
        clamped_mass,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    /// `mu_1 ..= mu_N`, with `mu_1 = 1`.
    Reference(Vec<f64>),
    Spectral(SpectralFactor),
}

/// A correlation model instantiated on a grid, with its derived parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpec {
    model: CorrelationModel,
    grid: PortGrid,
    sigma: f64,
    payload: Payload,
}

impl CorrelationSpec {
    pub fn new(model: CorrelationModel, grid: PortGrid, sigma: f64, sinc: SincConvention) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FasError::domain(format!("sigma {sigma} must be positive and finite")));
        }
        let n = grid.ports();
        let payload = match model {
            // One port: every model is a single CN(0, sigma²) gain.
            _ if n == 1 => Payload::Reference(vec![1.0]),
            CorrelationModel::SimpleReference => {
                let mu = (1..=n).map(|k| mu_simple(k, &grid)).collect::<Result<Vec<_>>>()?;
                Payload::Reference(mu)
            }
            CorrelationModel::ModifiedReference => {
                let mu = mu_modified(&grid)?;
                let mut v = vec![mu; n];
                v[0] = 1.0;
                Payload::Reference(v)
            }
            CorrelationModel::FullyCorrelated => {
                Payload::Spectral(spectral_factor(&covariance_matrix(&grid, sinc))?)
            }
        };
        Ok(Self { model, grid, sigma, payload })
    }

    /// Reference-model spec from an explicit `mu_1 ..= mu_N` (used for forced-correlation studies).
    pub fn with_mu(grid: PortGrid, sigma: f64, mu: Vec<f64>) -> Result<Self> {
        if mu.len() != grid.ports() {
            return Err(FasError::domain("mu vector length must equal the port count"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FasError::domain(format!("sigma {sigma} must be positive and finite")));
        }
        if mu.iter().any(|m| !m.is_finite() || m.abs() > 1.0) {
            return Err(FasError::domain("every |mu_k| must be at most one"));
        }
        let mut mu = mu;
        mu[0] = 1.0;
        Ok(Self {
            model: CorrelationModel::SimpleReference,
            grid,
            sigma,
            payload: Payload::Reference(mu),
        })
    }

    pub fn model(&self) -> CorrelationModel {
        self.model
    }

    pub fn grid(&self) -> &PortGrid {
        &self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `mu_1 ..= mu_N` for the reference models (and for any single-port grid).
    pub fn mu(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::Reference(mu) => Some(mu),
            Payload::Spectral(_) => None,
        }
    }

    pub fn spectral_factor(&self) -> Option<&SpectralFactor> {
        match &self.payload {
            Payload::Spectral(f) => Some(f),
            Payload::Reference(_) => None,
        }
    }

    /// Draws one channel vector. Consumes `2N` standard normals for the reference
    /// models and `2r` for the spectral construction.
    pub fn sample_gains<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSample {
        let mut gains = Vec::with_capacity(self.grid.ports());
        self.sample_into(rng, &mut gains);
        ChannelSample { gains }
    }

    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, gains: &mut Vec<Complex64>) {
        gains.clear();
        // Latent Gaussians have variance 1/2.
        let mut half_normal = || FRAC_1_SQRT_2 * rng.sample::<f64, _>(StandardNormal);
        let s = self.sigma;
        match &self.payload {
            Payload::Reference(mu) => {
                let x0 = half_normal();
                let y0 = half_normal();
                gains.push(Complex64::new(s * x0, s * y0));
                for &m in &mu[1..] {
                    let spread = (1.0 - m * m).max(0.0).sqrt();
                    let xk = half_normal();
                    let yk = half_normal();
                    gains.push(Complex64::new(
                        s * (spread * xk + m * x0),
                        s * (spread * yk + m * y0),
                    ));
                }
            }
            Payload::Spectral(factor) => {
                let f = factor.matrix();
                let latent: Vec<(f64, f64)> = (0..f.ncols())
                    .map(|_| (s * half_normal(), s * half_normal()))
                    .collect();
                for i in 0..f.nrows() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, &(re, im)) in latent.iter().enumerate() {
                        let w = f[(i, j)];
                        acc.re += w * re;
                        acc.im += w * im;
                    }
                    gains.push(acc);
                }
            }
        }
    }
}

/// Per-port complex gains of one draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub gains: Vec<Complex64>,
}

impl ChannelSample {
    pub fn fas_amplitude(&self) -> f64 {
        fas_amplitude(&self.gains)
    }
}

/// Amplitude at the best port, `max_k |g_k|`.
pub fn fas_amplitude(gains: &[Complex64]) -> f64 {
    gains.iter().map(|g| g.norm()).fold(0.0, f64::max)
}

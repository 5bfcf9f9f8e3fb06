//! Finite-blocklength BLER bounds for single-RF-chain fluid antenna systems:
//! special functions, port-correlation models, the law of the best-port
//! amplitude, Chernoff/union bounds and reproducible parameter sweeps.

pub mod bler;
pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod special_functions;
pub mod statistics;
pub mod sweep;

pub use bler::{
    analytic_bler_bound, conditional_bler_bound, conventional_bler, conventional_sinr, empirical_bler_bound,
    log_union_weight, BenchmarkConfig, BlerMethod, BlerResult, SystemConfig, UnionWeight,
};
pub use channel::{CorrelationModel, CorrelationSpec, PortGrid, SincConvention};
pub use error::{FasError, Result};
pub use statistics::{ks_distance, AmplitudeDistribution, EmpiricalDistribution};
pub use sweep::{BlerCurve, DistTable, OutputFormat, SweepSpec, ValidationReport};

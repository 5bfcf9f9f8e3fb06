//! Experiment descriptions, parameter sweeps and their CSV/JSON output.

mod output;
mod run;
mod spec;

pub use output::{
    curves_from_csv, curves_to_csv, curves_to_json, dist_to_csv, dist_to_json, format_float, render_curves,
    render_dist, render_report, report_to_csv, report_to_json, write_output, CURVE_HEADER, DIST_HEADER,
};
pub use run::{
    deviation_in_errors, run_dist, run_sweep, validate, BlerCurve, DistTable, ValidationCase, ValidationReport,
    BLER_DEVIATION_THRESHOLD, KS_THRESHOLD, PDF_MASS_THRESHOLD,
};
pub use spec::{apply_override, Axis, AxisName, Experiment, Method, OutputFormat, SweepSpec};

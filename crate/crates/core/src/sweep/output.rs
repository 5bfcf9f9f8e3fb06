use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

use super::run::{BlerCurve, DistTable, ValidationReport};
use super::spec::OutputFormat;

/// Column order of the BLER CSV.
pub const CURVE_HEADER: &str = "axis,label,bler,std_err,method";
/// Column order of the distribution CSV.
pub const DIST_HEADER: &str = "r,analytic_cdf,empirical_cdf,analytic_pdf,histogram_pdf";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn curves_to_csv(curves: &[BlerCurve]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for c in curves {
        let label = csv_field(&c.label);
        for i in 0..c.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                format_float(c.axis[i]),
                label,
                format_float(c.bler[i]),
                format_float(c.std_err[i]),
                c.method[i].name()
            );
        }
    }
    out
}

pub fn curves_to_json(curves: &[BlerCurve]) -> Result<String> {
    Ok(serde_json::to_string_pretty(curves)? + "\n")
}

pub fn dist_to_csv(table: &DistTable) -> String {
    let mut out = String::from(DIST_HEADER);
    out.push('\n');
    for i in 0..table.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(table.r[i]),
            format_float(table.analytic_cdf[i]),
            format_float(table.empirical_cdf[i]),
            format_float(table.analytic_pdf[i]),
            format_float(table.histogram_pdf[i])
        );
    }
    out
}

pub fn dist_to_json(table: &DistTable) -> Result<String> {
    Ok(serde_json::to_string_pretty(table)? + "\n")
}

pub fn report_to_json(report: &ValidationReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

/// One row per case: `label,ks_distance,pdf_mass_residual,bler_deviation`.
pub fn report_to_csv(report: &ValidationReport) -> String {
    let mut out = String::from("label,ks_distance,pdf_mass_residual,bler_deviation\n");
    for c in &report.cases {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&c.label),
            format_float(c.ks_distance),
            format_float(c.pdf_mass_residual),
            format_float(c.bler_deviation)
        );
    }
    out
}

pub fn render_curves(curves: &[BlerCurve], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => Ok(curves_to_csv(curves)),
        OutputFormat::Json => curves_to_json(curves),
    }
}

pub fn render_dist(table: &DistTable, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => Ok(dist_to_csv(table)),
        OutputFormat::Json => dist_to_json(table),
    }
}

pub fn render_report(report: &ValidationReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => Ok(report_to_csv(report)),
        OutputFormat::Json => report_to_json(report),
    }
}

/// Writes BLER curves to `path` in the requested format.
pub fn write_output(curves: &[BlerCurve], path: &Path, format: OutputFormat) -> Result<()> {
    fs::write(path, render_curves(curves, format)?)?;
    Ok(())
}

/// Parses the BLER CSV back into curves (points with the same label are grouped in order).
pub fn curves_from_csv(text: &str, axis_name: &str) -> Result<Vec<BlerCurve>> {
    use crate::bler::BlerMethod;
    use crate::error::FasError;

    let mut lines = text.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(FasError::config("CSV header does not match the curve schema"));
    }
    let mut curves: Vec<BlerCurve> = Vec::new();
    for line in lines {
        let fields = split_csv_line(line);
        if fields.len() != 5 {
            return Err(FasError::config(format!("malformed CSV row: {line}")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| FasError::config(format!("bad number '{s}': {e}")))
        };
        let method = match fields[4].as_str() {
            "analytic" => BlerMethod::AnalyticIntegral,
            "empirical" => BlerMethod::MonteCarlo,
            "closed_form" => BlerMethod::ClosedForm,
            other => return Err(FasError::config(format!("unknown method '{other}'"))),
        };
        let label = &fields[1];
        if curves.last().map(|c| &c.label) != Some(label) {
            curves.push(BlerCurve {
                label: label.clone(),
                axis_name: axis_name.to_string(),
                axis: Vec::new(),
                bler: Vec::new(),
                std_err: Vec::new(),
                method: Vec::new(),
            });
        }
        let c = curves.last_mut().expect("pushed above");
        c.axis.push(num(&fields[0])?);
        c.bler.push(num(&fields[2])?);
        c.std_err.push(num(&fields[3])?);
        c.method.push(method);
    }
    Ok(curves)
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(ch) = chars.next() {
        match ch {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    fields.push(cur);
    fields
}

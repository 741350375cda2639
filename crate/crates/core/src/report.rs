//! Bit-stable report emission: canonical JSON (sorted keys, fixed float
//! format) and flat CSV. Identical inputs serialize to identical bytes.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::slope::SlopeField;
use crate::suite::SuiteReport;

/// Output format for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Parse(format!(
                "unknown report format {other:?}; expected json|csv"
            ))),
        }
    }
}

/// C-style `%.12e` with a signed two-digit exponent; negative zero is
/// normalized so reruns stay byte-identical.
pub fn fmt_e(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    let raw = format!("{x:.12e}");
    match raw.split_once('e') {
        Some((mantissa, exp)) => {
            let e: i32 = exp.parse().unwrap_or(0);
            let sign = if e < 0 { '-' } else { '+' };
            format!("{mantissa}e{sign}{:02}", e.abs())
        }
        None => raw,
    }
}

fn push_json(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&fmt_e(n.as_f64().unwrap_or(0.0)));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings always serialize"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                push_json(item, out);
            }
            out.push(']');
        }
        // serde_json objects are BTreeMaps, so iteration is already sorted.
        Value::Object(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("keys always serialize"));
                out.push(':');
                push_json(v, out);
            }
            out.push('}');
        }
    }
}

/// Canonical JSON text for any serializable value.
pub fn canonical_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = String::new();
    push_json(&v, &mut out);
    out.push('\n');
    Ok(out)
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Flat CSV view of a suite report, one row per check.
pub fn suite_csv(report: &SuiteReport) -> String {
    let mut out =
        String::from("check,pass,skipped,worst_margin,tolerance,witness_indices,witness_scale,detail\n");
    for c in &report.checks {
        let (indices, scale) = match &c.witness {
            Some(w) => (
                w.indices
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
                w.scale.map(fmt_e).unwrap_or_default(),
            ),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_escape(&c.check_name),
            c.pass,
            c.skipped,
            fmt_e(c.worst_margin),
            fmt_e(c.tolerance),
            indices,
            scale,
            csv_escape(c.detail.as_deref().unwrap_or("")),
        ));
    }
    out
}

/// The n×K numeric table of a slope field; empty cells mark isolated
/// points at that scale.
pub fn slope_field_csv(field: &SlopeField) -> String {
    let mut header = String::from("point");
    for r in &field.radii {
        header.push_str(&format!(",eps_{}", fmt_e(*r)));
    }
    let mut out = header + "\n";
    for (i, row) in field.values.iter().enumerate() {
        out.push_str(&i.to_string());
        for cell in row {
            out.push(',');
            if let Some(v) = cell {
                out.push_str(&fmt_e(*v));
            }
        }
        out.push('\n');
    }
    out
}

/// Render a suite report in the requested format.
pub fn render_report(report: &SuiteReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => canonical_json(report),
        ReportFormat::Csv => Ok(suite_csv(report)),
    }
}

/// Write a suite report to disk; bit-stable for identical inputs.
pub fn write_report(report: &SuiteReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use crate::suite::{run_suite, SuiteKind, SuiteOptions};

    #[test]
    fn float_format_is_c_style() {
        assert_eq!(fmt_e(3.0), "3.000000000000e+00");
        assert_eq!(fmt_e(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(-0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(-1.5e-7), "-1.500000000000e-07");
        assert_eq!(fmt_e(6.02214076e23), "6.022140760000e+23");
    }

    #[test]
    fn identical_reports_serialize_identically() {
        let f1 = Instance::fixture_f1();
        let options = SuiteOptions::default();
        let r1 = run_suite(&f1, SuiteKind::Geometry, &options).unwrap();
        let r2 = run_suite(&f1, SuiteKind::Geometry, &options).unwrap();
        assert_ne!(r1.elapsed_seconds, 0.0);
        assert_eq!(
            render_report(&r1, ReportFormat::Json).unwrap(),
            render_report(&r2, ReportFormat::Json).unwrap()
        );
        assert_eq!(
            render_report(&r1, ReportFormat::Csv).unwrap(),
            render_report(&r2, ReportFormat::Csv).unwrap()
        );
    }

    #[test]
    fn json_round_trip_preserves_verdicts_and_witnesses() {
        let f1 = Instance::fixture_f1();
        let report = run_suite(&f1, SuiteKind::Theorems, &SuiteOptions::default()).unwrap();
        let text = render_report(&report, ReportFormat::Json).unwrap();
        let back: SuiteReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.pass, report.pass);
        assert_eq!(back.checks.len(), report.checks.len());
        for (a, b) in back.checks.iter().zip(&report.checks) {
            assert_eq!(a.check_name, b.check_name);
            assert_eq!(a.pass, b.pass);
            assert_eq!(a.witness, b.witness);
        }
    }

    #[test]
    fn slope_field_csv_shape() {
        use crate::slope::{slope_field, ScaleSchedule, SlopeVariant};
        let f1 = Instance::fixture_f1();
        let phi = f1.section("phi").unwrap();
        let sched = ScaleSchedule::new(vec![2.5, 0.5]).unwrap();
        let field = slope_field(phi, &sched, SlopeVariant::Asymptotic).unwrap();
        let csv = slope_field_csv(&field);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4); // header + 3 points
        assert!(lines[0].starts_with("point,eps_"));
        // the 0.5 column is empty (isolated points at that scale)
        assert!(lines[1].ends_with(','));
    }
}

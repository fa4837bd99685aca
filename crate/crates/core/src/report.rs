//! File formats for scenario, mesh, field and report artifacts.
//!
//! JSON artifacts are pretty-printed UTF-8 with a stable key order, so
//! identical inputs produce byte-identical files. CSV artifacts use a
//! header row, comma separators and `.` decimals regardless of locale;
//! floats are printed in Rust's shortest round-trip form. Field CSV rows
//! carry 1-based block indices to match the external indexing convention.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::TemperatureField;
use crate::metrics::ConvergenceReport;
use crate::system::SpectralReport;

/// Widest trajectory (in blocks) the CSV form accepts.
pub const TRAJECTORY_COLUMN_GUARD: usize = 1_000;

/// Serializes any report structure as pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes any report structure as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Reads and deserializes a JSON artifact.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Spectral report view with the (potentially long) eigenvalue list made
/// optional.
#[derive(Serialize)]
struct SpectralReportView<'a> {
    n_blocks: usize,
    lambda_max_abs: f64,
    stiffness_ratio: f64,
    euler_h_max: f64,
    zero_modes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<&'a [f64]>,
}

/// JSON form of a spectral report; the eigenvalue list is included only
/// on request (it has one entry per block).
pub fn spectral_json(report: &SpectralReport, include_eigenvalues: bool) -> Result<String> {
    to_json_string(&SpectralReportView {
        n_blocks: report.n_blocks(),
        lambda_max_abs: report.lambda_max_abs,
        stiffness_ratio: report.stiffness_ratio,
        euler_h_max: report.euler_h_max,
        zero_modes: report.zero_modes,
        eigenvalues: include_eigenvalues.then_some(&report.eigenvalues),
    })
}

/// One row per block: `block,temperature` with 1-based block indices,
/// mirroring a temperature-versus-space plot.
pub fn field_csv_string(field: &TemperatureField) -> String {
    let mut out = String::with_capacity(field.len() * 24);
    out.push_str("block,temperature\n");
    for (i, v) in field.values().iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, v);
    }
    out
}

pub fn write_field_csv(path: &Path, field: &TemperatureField) -> Result<()> {
    std::fs::write(path, field_csv_string(field))?;
    Ok(())
}

/// Parses a `block,temperature` CSV back into values, enforcing the
/// contiguous 1-based block column.
pub fn parse_field_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "block,temperature" => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header 'block,temperature', got {other:?}"
            )))
        }
    }
    let mut values = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (index_text, value_text) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("row {}: missing comma", row + 1)))?;
        let index: usize = index_text
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("row {}: bad block index: {e}", row + 1)))?;
        if index != row + 1 {
            return Err(Error::Parse(format!(
                "row {}: block indices must be contiguous and 1-based, got {index}",
                row + 1
            )));
        }
        let value: f64 = value_text
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("row {}: bad temperature: {e}", row + 1)))?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Parse("field CSV has no data rows".into()));
    }
    Ok(values)
}

pub fn read_field_csv(path: &Path) -> Result<Vec<f64>> {
    parse_field_csv(&std::fs::read_to_string(path)?)
}

/// One row per snapshot, one column per block (`time,b1,...,bN`), guarded
/// to [`TRAJECTORY_COLUMN_GUARD`] blocks.
pub fn trajectory_csv_string(snapshots: &[TemperatureField]) -> Result<String> {
    let n = snapshots.first().map(|f| f.len()).unwrap_or(0);
    if n == 0 {
        return Err(Error::Parse("empty trajectory".into()));
    }
    if n > TRAJECTORY_COLUMN_GUARD {
        return Err(Error::TooLarge { n, max: TRAJECTORY_COLUMN_GUARD });
    }
    let mut out = String::new();
    out.push_str("time");
    for i in 1..=n {
        let _ = write!(out, ",b{i}");
    }
    out.push('\n');
    for snapshot in snapshots {
        let _ = write!(out, "{}", snapshot.time());
        for v in snapshot.values() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Convergence table ready for log-log plotting: `h,max_d,sum_d,abs_ebe`.
pub fn convergence_csv_string(report: &ConvergenceReport) -> String {
    let mut out = String::from("h,max_d,sum_d,abs_ebe\n");
    for i in 0..report.h_values.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            report.h_values[i],
            report.max_d[i],
            report.sum_d[i],
            report.ebe[i].abs()
        );
    }
    out
}

pub fn write_convergence_csv(path: &Path, report: &ConvergenceReport) -> Result<()> {
    std::fs::write(path, convergence_csv_string(report))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;

    #[test]
    fn field_csv_round_trip() {
        let field = TemperatureField::new(vec![1.5, -2.0, 0.25], 3.0).unwrap();
        let text = field_csv_string(&field);
        assert!(text.starts_with("block,temperature\n1,1.5\n2,-2\n"));
        assert_eq!(parse_field_csv(&text).unwrap(), field.values());
    }

    #[test]
    fn field_csv_rejects_gaps_and_garbage() {
        assert!(parse_field_csv("block,temperature\n2,1.0\n").is_err());
        assert!(parse_field_csv("nope\n1,1.0\n").is_err());
        assert!(parse_field_csv("block,temperature\n1;1.0\n").is_err());
        assert!(parse_field_csv("block,temperature\n").is_err());
    }

    #[test]
    fn trajectory_csv_shape_and_guard() {
        let a = TemperatureField::new(vec![1.0, 2.0], 0.0).unwrap();
        let b = TemperatureField::new(vec![0.5, 2.5], 1.0).unwrap();
        let text = trajectory_csv_string(&[a, b]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time,b1,b2");
        assert_eq!(lines[1], "0,1,2");
        assert_eq!(lines[2], "1,0.5,2.5");

        let wide = TemperatureField::constant(1.0, TRAJECTORY_COLUMN_GUARD + 1, 0.0).unwrap();
        assert!(matches!(trajectory_csv_string(&[wide]), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn spectral_json_eigenvalue_flag() {
        let mesh = Mesh::new(vec![1.0, 1.0], vec![(0, 1, 1.0)], None).unwrap();
        let report = crate::system::spectral_report(&mesh).unwrap();
        let without = spectral_json(&report, false).unwrap();
        assert!(!without.contains("eigenvalues"));
        let with = spectral_json(&report, true).unwrap();
        assert!(with.contains("eigenvalues"));
        // Stable bytes for identical inputs.
        assert_eq!(with, spectral_json(&report, true).unwrap());
    }

    #[test]
    fn json_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        let scenario = crate::experiments::scenario_example1(5);
        write_json(&path, &scenario).unwrap();
        let back: crate::mesh::ScenarioSpec = read_json(&path).unwrap();
        assert_eq!(back, scenario);
    }

    #[test]
    fn convergence_csv_uses_absolute_ebe() {
        let report = ConvergenceReport {
            h_values: vec![0.5, 0.25, 0.125],
            max_d: vec![1.0, 0.5, 0.25],
            sum_d: vec![2.0, 1.0, 0.5],
            ebe: vec![-0.5, 0.25, -0.125],
            slope_max_d: 1.0,
            slope_sum_d: 1.0,
            slope_abs_ebe: 1.0,
        };
        let text = convergence_csv_string(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "h,max_d,sum_d,abs_ebe");
        assert_eq!(lines[1], "0.5,1,2,0.5");
        assert_eq!(lines[2], "0.25,0.5,1,0.25");
    }
}

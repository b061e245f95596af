//! Trace and summary writers.
//!
//! Traces are RFC 4180 CSV (CRLF line endings) with floats printed at
//! 17 significant digits so every value round-trips exactly. Summaries
//! are JSON with sorted keys; re-running an identical config yields
//! byte-identical files.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

/// 17 significant digits: exact round-trip for f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()
}

pub fn write_summary(path: &Path, summary: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn matrix_json(m: &DMatrix<f64>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
        .collect();
    Value::Array(rows)
}

pub fn vector_json(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|x| json!(x)).collect())
}

/// Natural log of the gap, floored to stay finite when the gap hits
/// machine zero.
pub fn log_gap(gap: f64) -> f64 {
    gap.max(1e-300).ln()
}

//! File formats: CSV matrices in and out, JSON out with fixed precision,
//! JSON specs in with path-qualified error messages.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use covmax::core_stats::DataMatrix;
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

// ---------------------------------------------------------------------------
// CSV matrices
// ---------------------------------------------------------------------------

/// Reads a CSV matrix: rows are observations, columns are variables, decimal
/// point `.`, optional header row. Errors name the offending row and column
/// (1-based, counting the header if present).
pub fn read_matrix(path: &Path) -> Result<DataMatrix> {
    let rows = read_csv_rows(path)?;
    DataMatrix::from_rows(&rows).with_context(|| format!("{}", path.display()))
}

/// Reads a CSV matrix that must be square (a covariance), for `--sigma0`
/// and `--truth` inputs.
pub fn read_square_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let rows = read_csv_rows(path)?;
    let m = rows.len();
    if rows.iter().any(|r| r.len() != m) {
        bail!(
            "{}: expected a square matrix, got {} rows of width {}",
            path.display(),
            m,
            rows[0].len()
        );
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(m, m, &flat))
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut first_data_line = true;
    for (line_idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        // A first line with any non-numeric cell is taken as the header.
        if first_data_line && cells.iter().any(|c| c.parse::<f64>().is_err()) {
            first_data_line = false;
            continue;
        }
        first_data_line = false;
        if let Some(w) = width {
            if cells.len() != w {
                bail!(
                    "{}: row {} has {} cells, expected {}",
                    path.display(),
                    line_idx + 1,
                    cells.len(),
                    w
                );
            }
        } else {
            width = Some(cells.len());
        }
        let mut row = Vec::with_capacity(cells.len());
        for (col_idx, cell) in cells.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                anyhow::anyhow!(
                    "{}: row {}, column {}: cannot parse {cell:?} as a number",
                    path.display(),
                    line_idx + 1,
                    col_idx + 1
                )
            })?;
            if !value.is_finite() {
                bail!(
                    "{}: row {}, column {}: non-finite value {cell:?}",
                    path.display(),
                    line_idx + 1,
                    col_idx + 1
                );
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(rows)
}

/// Writes a data matrix as headerless CSV. Floats use Rust's shortest
/// round-trip representation, so reading the file back recovers the exact
/// bits that were written.
pub fn write_matrix_csv(path: &Path, x: &DataMatrix) -> Result<()> {
    let mut out = String::new();
    for k in 0..x.n() {
        push_csv_row(&mut out, x.row(k));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Writes a square matrix as headerless CSV, same float format as
/// [`write_matrix_csv`].
pub fn write_square_csv(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    let mut row = Vec::with_capacity(a.ncols());
    for i in 0..a.nrows() {
        row.clear();
        row.extend((0..a.ncols()).map(|j| a[(i, j)]));
        push_csv_row(&mut out, &row);
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn push_csv_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

// ---------------------------------------------------------------------------
// JSON out: fixed 17-significant-digit floats
// ---------------------------------------------------------------------------

/// Serializes a value to pretty JSON with every non-integer number written
/// with 17 significant digits (`d.16e` scientific form), which pins the
/// exact `f64` bit pattern in the file regardless of the reader's parser.
pub fn to_json_17<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).context("serializing report")?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

/// [`to_json_17`] straight to a file.
pub fn write_json_17<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_json_17(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                // 1 leading + 16 fractional digits = 17 significant digits.
                let _ = write!(out, "{:.16e}", n.as_f64().expect("finite JSON number"));
            }
        }
        Value::String(s) => {
            out.push_str(&Value::String(s.clone()).to_string());
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                push_indent(out, indent + 1);
                write_value(item, indent + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            push_indent(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (key, item)) in map.iter().enumerate() {
                push_indent(out, indent + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 1, out);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            push_indent(out, indent);
            out.push('}');
        }
    }
}

fn push_indent(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

// ---------------------------------------------------------------------------
// JSON in: specs and configs with path-qualified errors
// ---------------------------------------------------------------------------

/// Parses a JSON spec/config file; a violation is reported with the JSON
/// path to the offending field.
pub fn read_json_spec<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        anyhow::anyhow!("{}: at {}: {}", path.display(), e.path(), e.inner())
    })
}

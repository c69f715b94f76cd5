use std::fs;
use std::io::Write;
use std::path::Path;

use hsdcov::matrix::DenseMatrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Reads a numeric CSV (rows = observations) into a matrix.
pub fn read_matrix(path: &Path, header: bool) -> CliResult<DenseMatrix> {
    let name = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{name}: {e}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1 + usize::from(header);
        let rec = rec.map_err(|e| CliError::Input(format!("{name}: malformed CSV at row {row}: {e}")))?;
        let values = rec
            .iter()
            .enumerate()
            .map(|(j, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Input(format!(
                    "{name}: row {row}, column {}: '{field}' is not a finite number",
                    j + 1
                ))),
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(CliError::Domain(format!("{name}: no data rows")));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| CliError::Input(format!("{name}: {e}")))
}

/// Shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `header` and `rows` as CSV to `path`, or stdout when `None`.
pub fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut buf = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    buf.write_record(header).map_err(io)?;
    for r in rows {
        buf.write_record(r).map_err(io)?;
    }
    let bytes = buf.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => Ok(std::io::stdout().write_all(&bytes)?),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes JSON to `path`, or stdout when `None`.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

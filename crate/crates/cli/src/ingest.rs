use std::path::Path;

use dpower::BoundedSample;

use crate::CliError;

/// Numeric column of a headed CSV file. Errors name the 1-based data row.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| CliError::Data(format!("{}: no column `{column}`", path.display())))?;
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CliError::Data(format!("{} row {row}: {e}", path.display())))?;
        let cell = rec.get(idx).unwrap_or("").trim();
        let v: f64 = cell
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::Data(format!("{} row {row}: `{cell}` in column `{column}` is not a number", path.display())))?;
        values.push(v);
    }
    Ok(values)
}

/// Reads `column` and checks every value against the declared bound `|x| <= s`.
pub fn ingest_csv(path: &Path, column: &str, bound_s: f64) -> Result<BoundedSample, CliError> {
    let values = read_column(path, column)?;
    if values.is_empty() {
        return Err(CliError::Data(format!("{}: column `{column}` has no data rows", path.display())));
    }
    let outside: Vec<String> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > bound_s)
        .map(|(i, v)| format!("row {} ({v})", i + 1))
        .collect();
    if !outside.is_empty() {
        return Err(CliError::Data(format!(
            "{}: values outside [-{bound_s}, {bound_s}] at {}",
            path.display(),
            outside.join(", ")
        )));
    }
    Ok(BoundedSample::new(values, bound_s)?)
}

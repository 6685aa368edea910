//! CSV ingestion and export.

use std::fs::File;
use std::path::Path;

use isiw_core::{Dataset, Location};

use crate::CliError;

fn reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| CliError::Input(format!("{}: missing column '{name}'", path.display())))
}

fn parse_cell(record: &csv::StringRecord, idx: usize, path: &Path, line: usize) -> Result<f64, CliError> {
    let raw = record.get(idx).unwrap_or("");
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Input(format!("{}:{line}: '{raw}' is not a finite number", path.display())))
}

/// Named numeric columns from a headed CSV file.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?.clone();
    let idx: Vec<usize> = names.iter().map(|n| column(&headers, n, path)).collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        for (c, &j) in idx.iter().enumerate() {
            cols[c].push(parse_cell(&rec, j, path, i + 2)?);
        }
    }
    Ok(cols)
}

pub fn read_points(path: &Path) -> Result<Vec<Location>, CliError> {
    let cols = read_columns(path, &["x", "y"])?;
    Ok(cols[0].iter().zip(&cols[1]).map(|(&x, &y)| Location::new(x, y)).collect())
}

/// A dataset from a CSV with header `x,y,value`.
pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let cols = read_columns(path, &["x", "y", "value"])?;
    let locs = cols[0].iter().zip(&cols[1]).map(|(&x, &y)| Location::new(x, y)).collect();
    Ok(Dataset::new(locs, cols[2].clone())?)
}

/// Rows of `x,y,<columns...>`.
pub fn write_table(path: &Path, columns: &[&str], locs: &[Location], values: &[&[f64]]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut header = vec!["x", "y"];
    header.extend_from_slice(columns);
    let io = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(io)?;
    for (i, p) in locs.iter().enumerate() {
        let mut rec = vec![p.x.to_string(), p.y.to_string()];
        rec.extend(values.iter().map(|col| col[i].to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

//! CSV ingestion and table output.
//!
//! Input layout: a header row; an optional leading timestamp column (named
//! date/time/timestamp, case-insensitive); one target column named by the
//! user; every other column is a covariate. Empty, `NA` or `NaN` cells are
//! treated as missing and filled by linear interpolation (interior gaps
//! only).

use std::path::Path;

use nalgebra::DMatrix;
use ssarx_core::data::{interpolate_missing, TimeSeriesDataset};

use crate::errors::{CliError, CliResult};

fn is_timestamp_name(name: &str) -> bool {
    matches!(
        name.to_ascii_lowercase().as_str(),
        "date" | "time" | "timestamp" | "datetime"
    )
}

fn parse_cell(raw: &str) -> CliResult<Option<f64>> {
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("na") || trimmed.eq_ignore_ascii_case("nan")
    {
        return Ok(None);
    }
    trimmed
        .parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::Data(format!("cannot parse {trimmed:?} as a number")))
}

/// Load a dataset, taking `target` as the response and everything else
/// (minus an optional timestamp column) as covariates.
pub fn load_dataset(path: &Path, target: &str) -> CliResult<TimeSeriesDataset> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(CliError::Data(format!("{}: empty header", path.display())));
    }
    let ts_col = if is_timestamp_name(&headers[0]) { Some(0) } else { None };
    let target_col = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| CliError::Data(format!("target column {target:?} not found")))?;
    if Some(target_col) == ts_col {
        return Err(CliError::Data(format!(
            "target column {target:?} is the timestamp column"
        )));
    }
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| Some(c) != ts_col && c != target_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(CliError::Data(String::from("no covariate columns left")));
    }

    let mut timestamps: Vec<String> = Vec::new();
    let mut y_raw: Vec<Option<f64>> = Vec::new();
    let mut x_raw: Vec<Vec<Option<f64>>> = vec![Vec::new(); feature_cols.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(CliError::Data(format!(
                "row {}: expected {} fields, got {}",
                row_idx + 2,
                headers.len(),
                record.len()
            )));
        }
        if let Some(c) = ts_col {
            timestamps.push(record[c].trim().to_string());
        }
        y_raw.push(parse_cell(&record[target_col])?);
        for (k, &c) in feature_cols.iter().enumerate() {
            x_raw[k].push(parse_cell(&record[c])?);
        }
    }
    if y_raw.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }

    let y = interpolate_missing(&y_raw)?;
    let n = y.len();
    let mut x = DMatrix::zeros(n, feature_cols.len());
    for (k, col) in x_raw.iter().enumerate() {
        let filled = interpolate_missing(col)?;
        for (i, v) in filled.into_iter().enumerate() {
            x[(i, k)] = v;
        }
    }
    let names: Vec<String> = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    let ts = if ts_col.is_some() { Some(timestamps) } else { None };
    Ok(TimeSeriesDataset::new(ts, y, x, names)?)
}

/// Format with 6 significant digits; used for every numeric cell so output
/// files are byte-stable.
pub fn fmt6(v: f64) -> String {
    if v == 0.0 {
        return String::from("0");
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..15).contains(&mag) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - mag).clamp(0, 17) as usize;
    let s = format!("{v:.decimals$}");
    // trim trailing zeros but keep at least one digit
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

/// Round to 6 significant digits for JSON output.
pub fn round6(v: f64) -> f64 {
    fmt6(v).parse().unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt6_cases() {
        assert_eq!(fmt6(0.0), "0");
        assert_eq!(fmt6(1.0), "1");
        assert_eq!(fmt6(-1.23456789), "-1.23457");
        assert_eq!(fmt6(123456.789), "123457");
        assert_eq!(fmt6(0.000123456789), "0.000123457");
        assert_eq!(fmt6(2.5), "2.5");
    }
}

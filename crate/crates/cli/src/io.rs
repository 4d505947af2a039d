//! CSV datasets and output files.

use std::fs;
use std::path::{Path, PathBuf};

use cenet_core::Dataset;
use ndarray::{Array1, Array2};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{config, CliError, Result};

/// A dataset with the predictor column names it was read with.
#[derive(Debug, Clone)]
pub struct LabeledData {
    pub data: Dataset,
    pub names: Vec<String>,
    pub response: String,
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_cell(path: &Path, line: u64, column: &str, cell: &str) -> Result<f64> {
    let trimmed = cell.trim();
    if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("na") || trimmed.eq_ignore_ascii_case("nan") {
        return Err(parse_error(path, line, format!("missing value in column '{column}'")));
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_error(
            path,
            line,
            format!("'{trimmed}' in column '{column}' is not a finite number"),
        )),
    }
}

/// Reads a header-first, comma-separated file and splits off `response`.
pub fn read_dataset(path: &Path, response: &str) -> Result<LabeledData> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(parse_error(path, 1, "missing header row"));
    }
    let response_col = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| config(format!("response column '{response}' not found in {}", path.display())))?;
    if headers.len() < 2 {
        return Err(parse_error(
            path,
            1,
            "need at least one predictor column besides the response",
        ));
    }

    let mut cells = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (k, cell) in record.iter().enumerate() {
            let value = parse_cell(path, line, &headers[k], cell)?;
            if k == response_col {
                y.push(value);
            } else {
                cells.push(value);
            }
        }
    }
    let n = y.len();
    if n < 2 {
        return Err(parse_error(
            path,
            1 + n as u64,
            format!("need at least 2 data rows, found {n}"),
        ));
    }
    let p = headers.len() - 1;
    let x = Array2::from_shape_vec((n, p), cells).expect("row lengths are checked by the csv reader");
    let names = headers
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != response_col)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(LabeledData {
        data: Dataset::new(x, Array1::from(y))?,
        names,
        response: response.to_string(),
    })
}

/// Predictors followed by the response, in the dialect [`read_dataset`] reads.
pub fn dataset_to_csv(data: &Dataset, names: &[String], response: &str) -> String {
    let mut s = names.join(",");
    s.push(',');
    s.push_str(response);
    s.push('\n');
    for (row, y) in data.x().rows().into_iter().zip(data.y()) {
        for v in row {
            s.push_str(&v.to_string());
            s.push(',');
        }
        s.push_str(&y.to_string());
        s.push('\n');
    }
    s
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), contents).unwrap();
        f
    }

    #[test]
    fn reads_named_response_anywhere() {
        let f = write_tmp("a,y,b\n1,2,3\n4,5.5,6e-1\n");
        let d = read_dataset(f.path(), "y").unwrap();
        assert_eq!(d.names, vec!["a", "b"]);
        assert_eq!(d.data.y().to_vec(), vec![2.0, 5.5]);
        assert_eq!(d.data.x().row(1).to_vec(), vec![4.0, 0.6]);
    }

    #[test]
    fn reports_line_of_bad_cell() {
        let f = write_tmp("a,y\n1,2\n3,NA\n5,6\n");
        let err = read_dataset(f.path(), "y").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
        let f = write_tmp("a,y\n1,2\n3,\n");
        assert!(matches!(
            read_dataset(f.path(), "y").unwrap_err(),
            CliError::Parse { line: 3, .. }
        ));
        let f = write_tmp("a,y\n1,2\nx,4\n");
        assert!(matches!(
            read_dataset(f.path(), "y").unwrap_err(),
            CliError::Parse { line: 3, .. }
        ));
        let f = write_tmp("a,y\n1,2\n3\n");
        assert!(matches!(
            read_dataset(f.path(), "y").unwrap_err(),
            CliError::Parse { line: 3, .. }
        ));
    }

    #[test]
    fn rejects_empty_and_short_files() {
        assert!(matches!(
            read_dataset(write_tmp("").path(), "y").unwrap_err(),
            CliError::Parse { .. }
        ));
        assert!(matches!(
            read_dataset(write_tmp("a,y\n1,2\n").path(), "y").unwrap_err(),
            CliError::Parse { .. }
        ));
        assert!(matches!(
            read_dataset(write_tmp("a,b\n1,2\n3,4\n").path(), "y").unwrap_err(),
            CliError::Config(_)
        ));
    }

    #[test]
    fn round_trips_through_csv() {
        let f = write_tmp("a,b,y\n0.1,-2,3\n1e-3,4,5\n7,8,9.25\n");
        let d = read_dataset(f.path(), "y").unwrap();
        let g = write_tmp(&dataset_to_csv(&d.data, &d.names, "y"));
        let e = read_dataset(g.path(), "y").unwrap();
        assert_eq!(d.data, e.data);
        assert_eq!(d.names, e.names);
    }
}

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

use super::Dataset;

/// Reads a numeric CSV file. `target_columns` index the columns that form
/// `y`; negative indices count from the end (`-1` is the last column).
pub fn load_csv(path: impl AsRef<Path>, target_columns: &[isize]) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&text, target_columns, name)
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses CSV text. A first line containing any non-numeric cell is taken to
/// be a header and skipped.
pub fn parse_csv(text: &str, target_columns: &[isize], name: impl Into<String>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(i as u64 + 1, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|c| c.parse::<f64>().ok()).collect();
        if i == 0 && parsed.iter().any(Option::is_none) {
            width = Some(record.len());
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_error(line, format!("expected {w} fields, found {}", record.len())));
        }
        let mut row = Vec::with_capacity(w);
        for (cell, value) in record.iter().zip(parsed) {
            row.push(value.ok_or_else(|| parse_error(line, format!("non-numeric cell {cell:?}")))?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(1, "no data rows"));
    }
    let width = rows[0].len();

    let mut targets = Vec::with_capacity(target_columns.len());
    for &c in target_columns {
        let idx = if c < 0 { width as isize + c } else { c };
        if idx < 0 || idx >= width as isize {
            return Err(Error::Config(format!("target column {c} out of range for {width} columns")));
        }
        if !targets.contains(&(idx as usize)) {
            targets.push(idx as usize);
        }
    }
    if targets.is_empty() {
        return Err(Error::Config("at least one target column is required".into()));
    }
    let features: Vec<usize> = (0..width).filter(|j| !targets.contains(j)).collect();

    let n = rows.len();
    let x = Matrix::from_fn(n, features.len(), |i, j| rows[i][features[j]]);
    let y = Matrix::from_fn(n, targets.len(), |i, j| rows[i][targets[j]]);
    Dataset::new(name, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_lines_last_target() {
        let d = parse_csv("1,2\n3,4\n5,6", &[-1], "t").unwrap();
        assert_eq!(d.x.column(0), vec![1.0, 3.0, 5.0]);
        assert_eq!(d.y.column(0), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn header_is_skipped() {
        let d = parse_csv("year,ppm\n1960.0, 316.9\n1960.1,317.2\n", &[1], "co2").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.y.get(0, 0), 316.9);
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(parse_csv("", &[-1], "e"), Err(Error::Parse { .. })));
        assert!(matches!(parse_csv("a,b\n", &[-1], "e"), Err(Error::Parse { .. })));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_csv("1,2\n3,4\n5,x\n", &[-1], "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv("h1,h2\n1,2\n3\n", &[-1], "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_target_index() {
        assert!(matches!(parse_csv("1,2\n", &[5], "t"), Err(Error::Config(_))));
    }
}

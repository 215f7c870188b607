//! End-to-end experiment protocols: extrapolation curves, the regression
//! benchmark with precision search, and the rotated-digit scatter.

mod benchmark;
mod co2;
mod digit;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use benchmark::{
    grid_search_tau, run_regression_benchmark, select_best, tau_grid_around, BenchmarkResult, GridCell, RegressionProtocol,
    SplitResult,
};
pub use co2::{run_co2_experiment, Co2Config, Co2Curve, Co2Result};
pub use digit::{
    rotation_angles, run_rotated_digit, train_digit_classifier, AngleScatter, DigitConfig, DigitScatter,
};

/// Version tag written into every JSON result file.
pub const RESULTS_SCHEMA_VERSION: u32 = 1;

/// Writes rows under a header line, creating parent directories.
pub(crate) fn write_csv<R>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()>
where
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Formats a float in shortest round-trip form for CSV output.
pub(crate) fn fmt(v: f64) -> String {
    format!("{v:?}")
}

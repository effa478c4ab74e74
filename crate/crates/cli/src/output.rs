//! Result rows and atomic file output.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// One test-set evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub kind: &'static str,
    pub seed: u64,
    pub method: &'static str,
    pub noise_level: u32,
    /// Blocks per layer; 1 for the baseline.
    pub k: usize,
    /// Features per block; the total feature count for the baseline.
    pub p: usize,
    /// Layers before the final ridge; 0 for the baseline.
    pub depth: usize,
    pub lambda_star: f64,
    pub test_mse: f64,
    pub one_minus_r2: f64,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub kind: &'static str,
    pub seed: u64,
    pub method: &'static str,
    pub noise_level: u32,
    pub k: usize,
    pub depth: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloRow {
    pub seed: u64,
    pub scenario: String,
    pub estimator: String,
    pub risk: f64,
    pub stderr: f64,
    pub theory: f64,
}

/// Serializes `rows` as CSV with a header, even when there are no rows.
pub fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().context("flushing csv")
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub const RESULT_HEADER: [&str; 11] = [
    "kind",
    "seed",
    "method",
    "noise_level",
    "k",
    "p",
    "depth",
    "lambda_star",
    "test_mse",
    "one_minus_r2",
    "accuracy",
];

pub const TIMING_HEADER: [&str; 7] = ["kind", "seed", "method", "noise_level", "k", "depth", "wall_seconds"];

pub const CURVE_HEADER: [&str; 4] = ["c", "flat", "ensemble_optimal", "ensemble_suboptimal"];

pub const MONTE_CARLO_HEADER: [&str; 6] = ["seed", "scenario", "estimator", "risk", "stderr", "theory"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_csv_keeps_header() {
        let bytes = to_csv::<ResultRow>(&[], &RESULT_HEADER).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap().trim_end(), RESULT_HEADER.join(","));
    }

    #[test]
    fn missing_accuracy_is_empty_field() {
        let row = ResultRow {
            kind: "simulate",
            seed: 3,
            method: "dre",
            noise_level: 1,
            k: 2,
            p: 5,
            depth: 1,
            lambda_star: 0.5,
            test_mse: 0.25,
            one_minus_r2: 0.1,
            accuracy: None,
        };
        let text = String::from_utf8(to_csv(&[row], &RESULT_HEADER).unwrap()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "simulate,3,dre,1,2,5,1,0.5,0.25,0.1,");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}

//! Time-series datasets: CSV ingestion with value clamping, an immutable
//! version store, and a synthetic household-load generator.

mod csv_io;
mod store;
pub mod synthetic;

use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{ingest_csv, ingest_csv_with, parse_csv, IngestOptions};
pub use store::{DatasetVersion, Mechanism, Provenance, VersionId, VersionStore};
pub use synthetic::generate_synthetic;

/// Default clamp range for residential load in watts.
pub const DEFAULT_LOWER: f64 = 0.0;
pub const DEFAULT_UPPER: f64 = 10_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("malformed csv: {0}")]
    MalformedCsv(String),
    #[error("missing value for series `{series}` at row {row}")]
    MissingValue { series: String, row: usize },
    #[error("dataset is empty: {0}")]
    EmptyDataset(String),
    #[error("timestamps are not strictly increasing at row {row}")]
    NonMonotonicTimestamps { row: usize },
    #[error("timestamp step at row {row} is {found}s, expected {expected}s")]
    IrregularStep { row: usize, expected: i64, found: i64 },
    #[error("invalid clamp bounds [{lower}, {upper}]: lower must be finite and below upper")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("unknown dataset version {0}")]
    UnknownVersion(VersionId),
    #[error("invalid provenance: {0}")]
    InvalidProvenance(String),
    #[error("invalid generator arguments: {0}")]
    InvalidGeneratorArgs(String),
}

/// Clamp range fixing per-cell sensitivity to `upper - lower`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampBounds {
    lower: f64,
    upper: f64,
}

impl ClampBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self, DatasetError> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(DatasetError::InvalidBounds { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Sensitivity of releasing a single clamped cell.
    pub fn delta_f(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lower).min(self.upper)
    }
}

impl Default for ClampBounds {
    fn default() -> Self {
        Self {
            lower: DEFAULT_LOWER,
            upper: DEFAULT_UPPER,
        }
    }
}

/// How timestamps were written in the source file; exports reuse it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampFormat {
    #[default]
    Iso8601,
    EpochSeconds,
}

/// A rectangular block of aligned readings: one row per series, one column
/// per timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    series_ids: Vec<String>,
    timestamps: Vec<i64>,
    values: Vec<Vec<f64>>,
    unit_label: String,
    #[serde(default)]
    timestamp_format: TimestampFormat,
}

impl TimeSeriesDataset {
    pub fn new(
        series_ids: Vec<String>,
        timestamps: Vec<i64>,
        values: Vec<Vec<f64>>,
        unit_label: impl Into<String>,
        timestamp_format: TimestampFormat,
    ) -> Result<Self, DatasetError> {
        if series_ids.is_empty() {
            return Err(DatasetError::EmptyDataset("no series".into()));
        }
        if timestamps.is_empty() {
            return Err(DatasetError::EmptyDataset("no timestamps".into()));
        }
        if values.len() != series_ids.len() {
            return Err(DatasetError::ShapeMismatch {
                expected: (series_ids.len(), timestamps.len()),
                found: (values.len(), values.first().map_or(0, Vec::len)),
            });
        }
        if let Some(row) = values.iter().find(|r| r.len() != timestamps.len()) {
            return Err(DatasetError::ShapeMismatch {
                expected: (series_ids.len(), timestamps.len()),
                found: (values.len(), row.len()),
            });
        }
        check_timestamps(&timestamps)?;
        Ok(Self {
            series_ids,
            timestamps,
            values,
            unit_label: unit_label.into(),
            timestamp_format,
        })
    }

    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn unit_label(&self) -> &str {
        &self.unit_label
    }

    pub fn timestamp_format(&self) -> TimestampFormat {
        self.timestamp_format
    }

    /// `(series, timestamps)`
    pub fn shape(&self) -> (usize, usize) {
        (self.series_ids.len(), self.timestamps.len())
    }

    pub fn cell_count(&self) -> usize {
        self.series_ids.len() * self.timestamps.len()
    }

    /// Iterates cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flat_map(|row| row.iter().copied())
    }

    /// Same ids and timestamps, new values. `values` is row-major and must
    /// have exactly `cell_count()` elements.
    pub fn with_values(&self, values: &[f64]) -> Result<Self, DatasetError> {
        let (rows, cols) = self.shape();
        if values.len() != rows * cols {
            return Err(DatasetError::ShapeMismatch {
                expected: (rows, cols),
                found: (values.len() / cols.max(1), cols),
            });
        }
        Ok(Self {
            series_ids: self.series_ids.clone(),
            timestamps: self.timestamps.clone(),
            values: values.chunks(cols).map(<[f64]>::to_vec).collect(),
            unit_label: self.unit_label.clone(),
            timestamp_format: self.timestamp_format,
        })
    }

    pub fn clamped(&self, bounds: &ClampBounds) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut().flatten() {
            *v = bounds.clamp(*v);
        }
        out
    }

    /// Hash over ids, timestamps and the exact bit patterns of all values.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.series_ids.hash(&mut h);
        self.timestamps.hash(&mut h);
        for v in self.cells() {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

fn check_timestamps(ts: &[i64]) -> Result<(), DatasetError> {
    if ts.len() < 2 {
        return Ok(());
    }
    let step = ts[1] - ts[0];
    for (i, pair) in ts.windows(2).enumerate() {
        let diff = pair[1] - pair[0];
        if diff <= 0 {
            return Err(DatasetError::NonMonotonicTimestamps { row: i + 2 });
        }
        if diff != step {
            return Err(DatasetError::IrregularStep {
                row: i + 2,
                expected: step,
                found: diff,
            });
        }
    }
    Ok(())
}

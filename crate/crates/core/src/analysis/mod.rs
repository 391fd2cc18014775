//! Privacy-utility measurements: MAE of a release, ε sweeps and their
//! correlation statistics, and chart-ready exports.

mod chart;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chart::{chart_data, ChartDocument};
pub use stats::{correlation, pearson, spearman, Correlation};

use crate::dataset::{DatasetVersion, Provenance, TimeSeriesDataset};
use crate::dp::{DpError, LaplaceMechanism};
use crate::mcda::{validate_grid, McdaError};

pub const DEFAULT_SEEDS_PER_POINT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("shape mismatch: {original:?} vs {noisy:?}")]
    ShapeMismatch {
        original: (usize, usize),
        noisy: (usize, usize),
    },
    #[error("version {noisy} is not a direct release of version {original}")]
    UnrelatedVersions { original: u64, noisy: u64 },
    #[error("correlation needs ≥3 paired, non-constant values: {0}")]
    DegenerateInput(String),
    #[error("seeds_per_point must be at least 1")]
    InvalidSeedCount,
    #[error(transparent)]
    Grid(#[from] McdaError),
    #[error(transparent)]
    Dp(#[from] DpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub epsilon: f64,
    pub delta_f: f64,
    pub mae: f64,
    /// Analytic expectation `Δf/ε` of the per-cell absolute error.
    pub expected_mae: f64,
    pub per_series_mae: Vec<f64>,
    pub max_abs_error: f64,
    pub cells: usize,
    pub units: String,
}

/// Exact error statistics between a root version and one of its releases.
pub fn compute_mae(
    original: &DatasetVersion,
    noisy: &DatasetVersion,
) -> Result<UtilityReport, AnalysisError> {
    let provenance = match (noisy.parent_id(), noisy.provenance()) {
        (Some(p), Some(prov)) if p == original.version_id() => prov,
        _ => {
            return Err(AnalysisError::UnrelatedVersions {
                original: original.version_id(),
                noisy: noisy.version_id(),
            })
        }
    };
    utility_report(original.payload(), noisy.payload(), provenance)
}

/// Error statistics for a noisy payload produced from `original` under
/// `provenance`, whether or not it has been stored yet.
pub fn utility_report(
    original: &TimeSeriesDataset,
    noisy: &TimeSeriesDataset,
    provenance: &Provenance,
) -> Result<UtilityReport, AnalysisError> {
    let (a, b) = (original, noisy);
    if a.shape() != b.shape() {
        return Err(AnalysisError::ShapeMismatch {
            original: a.shape(),
            noisy: b.shape(),
        });
    }
    let mut per_series_mae = Vec::with_capacity(a.shape().0);
    let mut total = 0.0;
    let mut max_abs_error: f64 = 0.0;
    for (ra, rb) in a.values().iter().zip(b.values()) {
        let mut row_sum = 0.0;
        for (x, y) in ra.iter().zip(rb) {
            let e = (x - y).abs();
            row_sum += e;
            max_abs_error = max_abs_error.max(e);
        }
        total += row_sum;
        per_series_mae.push(row_sum / ra.len() as f64);
    }
    let cells = a.cell_count();
    Ok(UtilityReport {
        epsilon: provenance.epsilon_used,
        delta_f: provenance.delta_f,
        mae: total / cells as f64,
        expected_mae: provenance.scale(),
        per_series_mae,
        max_abs_error,
        cells,
        units: a.unit_label().to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: Vec<f64>,
    pub mae_curve: Vec<f64>,
    pub expected_mae: Vec<f64>,
    /// Standard deviation of the per-seed MAE at each point.
    pub mae_std: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pearson_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spearman_rho: Option<f64>,
    pub seeds_per_point: usize,
    pub delta_f: f64,
    pub base_seed: u64,
    pub units: String,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for repetition `rep` of grid point `point`.
pub fn sweep_seed(base_seed: u64, point: usize, rep: usize) -> u64 {
    splitmix64(splitmix64(base_seed ^ point as u64).wrapping_add(rep as u64))
}

fn single_release_mae(data: &TimeSeriesDataset, mechanism: &LaplaceMechanism) -> f64 {
    let sum: f64 = data
        .cells()
        .zip(mechanism.samples())
        .map(|(v, n)| ((v + n) - v).abs())
        .sum();
    sum / data.cell_count() as f64
}

/// Mean MAE at each ε over `seeds_per_point` independent noisings. Runs
/// outside any budget ledger. Points are computed in parallel and collected
/// by index.
pub fn sweep_epsilon(
    version: &DatasetVersion,
    grid: &[f64],
    delta_f: f64,
    seeds_per_point: usize,
    base_seed: u64,
) -> Result<SweepResult, AnalysisError> {
    validate_grid(grid)?;
    if seeds_per_point == 0 {
        return Err(AnalysisError::InvalidSeedCount);
    }
    LaplaceMechanism::for_release(delta_f, grid[0], 0)?;
    let data = version.payload();

    let points: Vec<(f64, f64)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let maes: Vec<f64> = (0..seeds_per_point)
                .map(|rep| {
                    let mech = LaplaceMechanism::for_release(
                        delta_f,
                        eps,
                        sweep_seed(base_seed, i, rep),
                    )
                    .expect("scale validated above");
                    single_release_mae(data, &mech)
                })
                .collect();
            let k = maes.len() as f64;
            let mean = maes.iter().sum::<f64>() / k;
            let std = if maes.len() > 1 {
                (maes.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            (mean, std)
        })
        .collect();

    let mae_curve: Vec<f64> = points.iter().map(|p| p.0).collect();
    let corr = correlation(grid, &mae_curve).ok();
    Ok(SweepResult {
        grid: grid.to_vec(),
        expected_mae: grid.iter().map(|e| delta_f / e).collect(),
        mae_std: points.iter().map(|p| p.1).collect(),
        mae_curve,
        pearson_r: corr.map(|c| c.pearson),
        spearman_rho: corr.map(|c| c.spearman),
        seeds_per_point,
        delta_f,
        base_seed,
        units: data.unit_label().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        generate_synthetic, ingest_csv, ClampBounds, Provenance, TimestampFormat, VersionStore,
    };
    use crate::dp::{privatize, BudgetLedger};
    use crate::mcda::DEFAULT_GRID;

    fn tiny_store(values: Vec<Vec<f64>>) -> VersionStore {
        let n = values[0].len();
        let ds = TimeSeriesDataset::new(
            (0..values.len()).map(|i| format!("s{i}")).collect(),
            (0..n as i64).map(|i| i * 600).collect(),
            values,
            "kWh",
            TimestampFormat::EpochSeconds,
        )
        .unwrap();
        VersionStore::new(ingest_csv(&ds.to_csv_bytes(), ClampBounds::default()).unwrap())
    }

    #[test]
    fn zero_noise_release_has_zero_mae() {
        let mut store = tiny_store(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let payload = store.root().payload().clone();
        store
            .fork(0, payload, Provenance::laplace(1.0, 10.0, 0))
            .unwrap();
        let r = compute_mae(store.root(), store.get(1).unwrap()).unwrap();
        assert_eq!(r.mae, 0.0);
        assert_eq!(r.max_abs_error, 0.0);
        assert_eq!(r.expected_mae, 10.0);
    }

    #[test]
    fn constant_offset() {
        let mut store = tiny_store(vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        let shifted = store.root().payload().with_values(&[3.0; 4]).unwrap();
        store
            .fork(0, shifted, Provenance::laplace(2.0, 10.0, 0))
            .unwrap();
        let r = compute_mae(store.root(), store.get(1).unwrap()).unwrap();
        assert_eq!((r.mae, r.max_abs_error), (3.0, 3.0));
        assert_eq!(r.per_series_mae, vec![3.0, 3.0]);
        assert_eq!(r.expected_mae, 5.0);
    }

    #[test]
    fn unrelated_versions_rejected() {
        let mut store = tiny_store(vec![vec![0.0, 0.0]]);
        let p = store.root().payload().clone();
        store.fork(0, p.clone(), Provenance::laplace(1.0, 1.0, 0)).unwrap();
        store.fork(0, p, Provenance::laplace(1.0, 1.0, 0)).unwrap();
        let (v1, v2) = (store.get(1).unwrap(), store.get(2).unwrap());
        assert!(matches!(
            compute_mae(v1, v2),
            Err(AnalysisError::UnrelatedVersions { .. })
        ));
        assert!(matches!(
            compute_mae(store.root(), store.root()),
            Err(AnalysisError::UnrelatedVersions { .. })
        ));
    }

    #[test]
    fn release_mae_near_scale_and_per_series_consistent() {
        let ds = generate_synthetic(200, 1, 42).unwrap();
        let mut store =
            VersionStore::new(ingest_csv(&ds.to_csv_bytes(), ClampBounds::default()).unwrap());
        let mut ledger = BudgetLedger::default();
        let id = privatize(&mut store, 0, 1.0, 10.0, &mut ledger, 11).unwrap();
        let r = compute_mae(store.root(), store.get(id).unwrap()).unwrap();
        assert!((r.mae - 10.0).abs() / 10.0 < 0.05, "mae {}", r.mae);
        let avg = r.per_series_mae.iter().sum::<f64>() / r.per_series_mae.len() as f64;
        assert!((avg - r.mae).abs() < 1e-9);
        assert!(r.max_abs_error >= r.mae);
    }

    #[test]
    fn sweep_is_deterministic_and_monotone() {
        let ds = generate_synthetic(50, 1, 3).unwrap();
        let v = ingest_csv(&ds.to_csv_bytes(), ClampBounds::default()).unwrap();
        let a = sweep_epsilon(&v, &DEFAULT_GRID, 10.0, 4, 9).unwrap();
        let b = sweep_epsilon(&v, &DEFAULT_GRID, 10.0, 4, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.mae_curve.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(a.spearman_rho, Some(-1.0));
        assert_eq!(a.expected_mae[2], 10.0);
    }

    #[test]
    fn two_point_sweep_has_no_correlation() {
        let ds = generate_synthetic(2, 1, 3).unwrap();
        let v = ingest_csv(&ds.to_csv_bytes(), ClampBounds::default()).unwrap();
        let s = sweep_epsilon(&v, &[0.1, 2.0], 10.0, 2, 1).unwrap();
        assert_eq!(s.mae_curve.len(), 2);
        assert!(s.pearson_r.is_none() && s.spearman_rho.is_none());
    }

    #[test]
    fn sweep_rejects_bad_arguments() {
        let ds = generate_synthetic(1, 1, 3).unwrap();
        let v = ingest_csv(&ds.to_csv_bytes(), ClampBounds::default()).unwrap();
        assert!(matches!(
            sweep_epsilon(&v, &[], 10.0, 2, 1),
            Err(AnalysisError::Grid(McdaError::EmptyGrid))
        ));
        assert!(matches!(
            sweep_epsilon(&v, &[0.1, 5.0], 10.0, 2, 1),
            Err(AnalysisError::Grid(McdaError::GridOutsideSafeRange(_)))
        ));
        assert!(matches!(
            sweep_epsilon(&v, &[0.1], 10.0, 0, 1),
            Err(AnalysisError::InvalidSeedCount)
        ));
    }

    #[test]
    fn averaging_over_seeds_concentrates() {
        let ds = generate_synthetic(5, 1, 3).unwrap();
        let v = ingest_csv(&ds.to_csv_bytes(), ClampBounds::default()).unwrap();
        // spread of the point estimate across independent base seeds
        let spread = |k: usize| {
            let est: Vec<f64> = (0..30)
                .map(|b| sweep_epsilon(&v, &[1.0], 10.0, k, b).unwrap().mae_curve[0])
                .collect();
            let m = est.iter().sum::<f64>() / est.len() as f64;
            (est.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (est.len() - 1) as f64).sqrt()
        };
        assert!(spread(20) < spread(1));
    }
}

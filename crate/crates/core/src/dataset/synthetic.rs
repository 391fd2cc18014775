//! Synthetic household electricity-demand profiles at 10-minute resolution.
//!
//! Each household draws a base load, a morning peak and a larger evening
//! peak; days vary by a random scale factor and every reading carries
//! seeded Gaussian jitter plus occasional appliance spikes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::{DatasetError, TimeSeriesDataset, TimestampFormat, DEFAULT_LOWER, DEFAULT_UPPER};

pub const STEP_SECONDS: i64 = 600;
pub const STEPS_PER_DAY: usize = 144;
/// 2009-01-01T00:00:00Z
pub const START_EPOCH: i64 = 1_230_768_000;

struct Household {
    base: f64,
    morning_amp: f64,
    morning_hour: f64,
    morning_width: f64,
    evening_amp: f64,
    evening_hour: f64,
    evening_width: f64,
}

impl Household {
    fn draw(rng: &mut ChaCha20Rng) -> Self {
        Self {
            base: rng.random_range(150.0..500.0),
            morning_amp: rng.random_range(300.0..1500.0),
            morning_hour: rng.random_range(6.0..9.0),
            morning_width: rng.random_range(0.6..1.4),
            evening_amp: rng.random_range(800.0..3000.0),
            evening_hour: rng.random_range(17.5..21.0),
            evening_width: rng.random_range(1.0..2.2),
        }
    }

    fn expected_load(&self, hour: f64) -> f64 {
        let bump = |center: f64, width: f64| {
            // wrap around midnight so late peaks do not get cut off
            let d = (hour - center + 12.0).rem_euclid(24.0) - 12.0;
            (-0.5 * (d / width).powi(2)).exp()
        };
        self.base
            + self.morning_amp * bump(self.morning_hour, self.morning_width)
            + self.evening_amp * bump(self.evening_hour, self.evening_width)
    }
}

/// Deterministic for a fixed `seed`. Values are watts in `[0, 10000]`,
/// rounded to 0.1 W.
pub fn generate_synthetic(
    households: usize,
    days: usize,
    seed: u64,
) -> Result<TimeSeriesDataset, DatasetError> {
    if households == 0 {
        return Err(DatasetError::InvalidGeneratorArgs(
            "households must be at least 1".into(),
        ));
    }
    if days == 0 {
        return Err(DatasetError::InvalidGeneratorArgs(
            "days must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let steps = days * STEPS_PER_DAY;
    let jitter = Normal::new(0.0, 0.12).expect("valid normal");
    let width = households.to_string().len().max(3);

    let mut ids = Vec::with_capacity(households);
    let mut values = Vec::with_capacity(households);
    for h in 0..households {
        ids.push(format!("H{:0width$}", h + 1));
        let profile = Household::draw(&mut rng);
        let mut row = Vec::with_capacity(steps);
        for day in 0..days {
            let day_scale: f64 = rng.random_range(0.85..1.15);
            for step in 0..STEPS_PER_DAY {
                let hour = step as f64 * STEP_SECONDS as f64 / 3600.0;
                let mut load = profile.expected_load(hour) * day_scale;
                load *= 1.0 + jitter.sample(&mut rng);
                if rng.random_bool(0.03) {
                    load += rng.random_range(1000.0..4000.0);
                }
                let load = load.clamp(DEFAULT_LOWER, DEFAULT_UPPER);
                row.push((load * 10.0).round() / 10.0);
            }
            debug_assert_eq!(row.len(), (day + 1) * STEPS_PER_DAY);
        }
        values.push(row);
    }
    let timestamps = (0..steps as i64)
        .map(|i| START_EPOCH + i * STEP_SECONDS)
        .collect();
    TimeSeriesDataset::new(ids, timestamps, values, "W", TimestampFormat::Iso8601)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ingest_csv, ClampBounds};

    #[test]
    fn hed_like_shape_and_bounds() {
        let ds = generate_synthetic(200, 1, 42).unwrap();
        assert_eq!(ds.shape(), (200, 144));
        assert!(ds.cells().all(|v| (0.0..=10_000.0).contains(&v)));
        assert_eq!(ds.series_ids()[0], "H001");
        assert_eq!(ds.timestamps()[1] - ds.timestamps()[0], STEP_SECONDS);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(5, 2, 9).unwrap();
        let b = generate_synthetic(5, 2, 9).unwrap();
        let c = generate_synthetic(5, 2, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn evening_exceeds_night_on_average() {
        let ds = generate_synthetic(200, 1, 1).unwrap();
        let mean_at = |step: usize| ds.values().iter().map(|r| r[step]).sum::<f64>() / 200.0;
        // 03:00 vs 19:00
        assert!(mean_at(114) > 2.0 * mean_at(18));
    }

    #[test]
    fn minimal_dataset_round_trips_through_ingest() {
        let ds = generate_synthetic(1, 1, 3).unwrap();
        let v = ingest_csv(&ds.to_csv_bytes(), ClampBounds::default()).unwrap();
        assert_eq!(v.payload().shape(), (1, 144));
        assert_eq!(v.payload().values(), ds.values());
    }

    #[test]
    fn zero_arguments_rejected() {
        assert!(generate_synthetic(0, 1, 1).is_err());
        assert!(generate_synthetic(1, 0, 1).is_err());
    }
}

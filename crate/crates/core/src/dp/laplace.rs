use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::DpError;
use crate::dataset::TimeSeriesDataset;

/// Inverse CDF of the zero-centred Laplace distribution for `u ∈ (−½, ½)`:
/// `−b · sign(u) · ln(1 − 2|u|)`.
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -scale * u.signum() * (-2.0 * u.abs()).ln_1p()
}

/// Uniform draw on the open interval (−½, ½) from 53 random bits.
fn open_centered_uniform(rng: &mut impl RngCore) -> f64 {
    loop {
        let bits = rng.next_u64() >> 11;
        if bits != 0 {
            return bits as f64 * (1.0 / (1u64 << 53) as f64) - 0.5;
        }
    }
}

/// Seeded Laplace noise source with scale `b = Δf/ε`. The stream is
/// ChaCha20 keyed by `seed`, so equal seeds give bit-identical noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceMechanism {
    scale: f64,
    seed: u64,
}

impl LaplaceMechanism {
    pub fn new(scale: f64, seed: u64) -> Result<Self, DpError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(DpError::InvalidScale(scale));
        }
        Ok(Self { scale, seed })
    }

    pub fn for_release(delta_f: f64, epsilon: f64, seed: u64) -> Result<Self, DpError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(DpError::InvalidScale(delta_f / epsilon));
        }
        Self::new(delta_f / epsilon, seed)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn samples(&self) -> impl Iterator<Item = f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let scale = self.scale;
        std::iter::repeat_with(move || laplace_from_uniform(open_centered_uniform(&mut rng), scale))
    }

    pub fn sample(&self, count: usize) -> Vec<f64> {
        self.samples().take(count).collect()
    }

    /// Adds one independent draw to every cell, row-major. No re-clamping.
    pub fn perturb(&self, dataset: &TimeSeriesDataset) -> TimeSeriesDataset {
        let noisy: Vec<f64> = dataset
            .cells()
            .zip(self.samples())
            .map(|(v, n)| v + n)
            .collect();
        dataset
            .with_values(&noisy)
            .expect("perturbation preserves shape")
    }
}

pub fn sample_laplace(scale: f64, count: usize, seed: u64) -> Result<Vec<f64>, DpError> {
    if count == 0 {
        return Err(DpError::InvalidCount);
    }
    Ok(LaplaceMechanism::new(scale, seed)?.sample(count))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_maps_to_zero() {
        assert_eq!(laplace_from_uniform(0.0, 10.0), 0.0);
    }

    #[test]
    fn inverse_cdf_is_odd_and_matches_closed_form() {
        for u in [0.1, 0.25, 0.4, 0.49] {
            let x = laplace_from_uniform(u, 3.0);
            assert_eq!(x, -laplace_from_uniform(-u, 3.0));
            let closed = -3.0 * (1.0 - 2.0 * u).ln();
            assert!((x - closed).abs() < 1e-12);
            // Laplace CDF at x equals 1/2 + u
            let cdf = 1.0 - 0.5 * (-x / 3.0).exp();
            assert!((cdf - (0.5 + u)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_stays_in_open_interval() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..100_000 {
            let u = open_centered_uniform(&mut rng);
            assert!(u > -0.5 && u < 0.5);
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let a = sample_laplace(10.0, 1000, 99).unwrap();
        let b = sample_laplace(10.0, 1000, 99).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = sample_laplace(10.0, 1000, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn prefix_stable_across_counts() {
        let short = sample_laplace(1.0, 10, 4).unwrap();
        let long = sample_laplace(1.0, 20, 4).unwrap();
        assert_eq!(short[..], long[..10]);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(sample_laplace(0.0, 1, 1), Err(DpError::InvalidScale(_))));
        assert!(matches!(sample_laplace(-1.0, 1, 1), Err(DpError::InvalidScale(_))));
        assert!(matches!(sample_laplace(1.0, 0, 1), Err(DpError::InvalidCount)));
    }

    #[test]
    fn moments_match_laplace() {
        // E|X| = b, Var X = 2b²
        let xs = sample_laplace(10.0, 200_000, 2024).unwrap();
        let n = xs.len() as f64;
        let mean_abs = xs.iter().map(|x| x.abs()).sum::<f64>() / n;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean_abs - 10.0).abs() / 10.0 < 0.02, "mean |x| = {mean_abs}");
        assert!((var - 200.0).abs() / 200.0 < 0.03, "var = {var}");
    }
}

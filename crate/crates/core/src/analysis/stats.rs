use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<Correlation, AnalysisError> {
    Ok(Correlation {
        pearson: pearson(xs, ys)?,
        spearman: spearman(xs, ys)?,
    })
}

fn check(xs: &[f64], ys: &[f64]) -> Result<(), AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::DegenerateInput(format!(
            "length mismatch {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(AnalysisError::DegenerateInput(format!(
            "need at least 3 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(AnalysisError::DegenerateInput("non-finite value".into()));
    }
    Ok(())
}

/// Pearson product-moment coefficient, clamped to [−1, 1].
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    check(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::DegenerateInput("constant input".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank coefficient. Without ties the classic
/// `1 − 6Σd²/(n(n²−1))` form is used, which is exact in floating point for
/// perfectly (anti)monotone data; with ties it is Pearson over average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    check(xs, ys)?;
    let (rx, ry) = (ranks(xs), ranks(ys));
    let tied = |r: &[f64]| r.iter().any(|v| v.fract() != 0.0) || has_duplicates(r);
    if tied(&rx) || tied(&ry) {
        return pearson(&rx, &ry);
    }
    let n = xs.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((1.0 - 6.0 * d2 / (n * (n * n - 1.0))).clamp(-1.0, 1.0))
}

fn has_duplicates(r: &[f64]) -> bool {
    let mut sorted = r.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

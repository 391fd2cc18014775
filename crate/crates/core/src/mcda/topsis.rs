//! TOPSIS over an arbitrary alternatives × criteria matrix.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Larger is better.
    Benefit,
    /// Smaller is better.
    Cost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopsisOutcome {
    pub normalized: Vec<Vec<f64>>,
    pub weighted: Vec<Vec<f64>>,
    pub ideal: Vec<f64>,
    pub anti_ideal: Vec<f64>,
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    pub closeness: Vec<f64>,
}

/// Vector-normalizes each column (all-zero columns stay zero), applies the
/// weights, and measures Euclidean distance of every row to the ideal and
/// anti-ideal points. Closeness is `D− / (D+ + D−)`, or 0 when both are 0.
///
/// `keys` only fixes the summation order of the column norms (ascending key)
/// so that permuting rows yields bit-identical results.
///
/// Callers guarantee rectangular input with `weights.len()` columns.
pub fn evaluate(
    keys: &[f64],
    values: &[Vec<f64>],
    orientations: &[Orientation],
    weights: &[f64],
) -> TopsisOutcome {
    let rows = values.len();
    let cols = weights.len();
    debug_assert_eq!(keys.len(), rows);
    debug_assert_eq!(orientations.len(), cols);

    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));

    let norms: Vec<f64> = (0..cols)
        .map(|j| {
            order
                .iter()
                .map(|&i| values[i][j] * values[i][j])
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let normalized: Vec<Vec<f64>> = values
        .iter()
        .map(|row| {
            row.iter()
                .zip(&norms)
                .map(|(&x, &n)| if n == 0.0 { 0.0 } else { x / n })
                .collect()
        })
        .collect();
    let weighted: Vec<Vec<f64>> = normalized
        .iter()
        .map(|row| row.iter().zip(weights).map(|(r, w)| r * w).collect())
        .collect();

    let mut ideal = vec![0.0; cols];
    let mut anti_ideal = vec![0.0; cols];
    for j in 0..cols {
        let (lo, hi) = weighted
            .iter()
            .map(|r| r[j])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let (best, worst) = match orientations[j] {
            Orientation::Benefit => (hi, lo),
            Orientation::Cost => (lo, hi),
        };
        ideal[j] = best;
        anti_ideal[j] = worst;
    }

    let distance = |row: &[f64], target: &[f64]| {
        row.iter()
            .zip(target)
            .map(|(v, t)| (v - t) * (v - t))
            .sum::<f64>()
            .sqrt()
    };
    let d_plus: Vec<f64> = weighted.iter().map(|r| distance(r, &ideal)).collect();
    let d_minus: Vec<f64> = weighted.iter().map(|r| distance(r, &anti_ideal)).collect();
    let closeness = d_plus
        .iter()
        .zip(&d_minus)
        .map(|(p, m)| {
            let denom = p + m;
            if denom == 0.0 {
                0.0
            } else {
                m / denom
            }
        })
        .collect();

    TopsisOutcome {
        normalized,
        weighted,
        ideal,
        anti_ideal,
        d_plus,
        d_minus,
        closeness,
    }
}

/// Index of the eligible alternative with maximal closeness; exact ties go to
/// the smaller alternative value.
pub fn pick_best(alternatives: &[f64], closeness: &[f64], eligible: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in (0..closeness.len()).filter(|&i| eligible[i]) {
        best = match best {
            None => Some(i),
            Some(b) => {
                let better = closeness[i] > closeness[b]
                    || (closeness[i] == closeness[b] && alternatives[i] < alternatives[b]);
                Some(if better { i } else { b })
            }
        };
    }
    best
}

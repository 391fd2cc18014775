//! Preference sliders to criterion weights, the ε decision matrix, and
//! TOPSIS selection of the release budget.
//!
//! Decision matrix over each candidate ε (all values non-negative):
//!
//! | criterion              | orientation | value          |
//! |------------------------|-------------|----------------|
//! | `privacy_loss`         | cost        | `e^ε − 1`      |
//! | `precision`            | benefit     | `ε / Δf`       |
//! | `compliance`           | benefit     | `1[ε ≤ cap]`   |
//! | `reidentification_risk`| cost        | `s · (e^ε − 1)`|
//!
//! `e^ε` bounds the likelihood ratio an ε-DP release allows, `ε/Δf` is the
//! reciprocal of the expected per-cell absolute Laplace error, and `s` is the
//! data-sensitivity slider. With these columns and a compliance raw weight of
//! 3 the canonical privacy-first, balanced and utility-first profiles select
//! 0.1, 1.0 and 2.0 respectively, independent of Δf.

mod policy;
pub mod topsis;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use policy::{CompliancePolicy, PolicySet, DEFAULT_POLICIES_TOML};
pub use topsis::Orientation;

pub const SAFE_MIN_EPSILON: f64 = 0.1;
pub const SAFE_MAX_EPSILON: f64 = 2.0;
pub const DEFAULT_GRID: [f64; 5] = [0.1, 0.5, 1.0, 1.5, 2.0];
/// Raw weight the compliance criterion receives when compliance is required.
pub const COMPLIANCE_RAW_WEIGHT: f64 = 3.0;

// Slack for comparing ε values against caps and the safe range.
const EPS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McdaError {
    #[error("invalid preference profile: {0}")]
    InvalidProfile(String),
    #[error("invalid criterion weights: {0}")]
    InvalidWeights(String),
    #[error("epsilon grid is empty")]
    EmptyGrid,
    #[error("epsilon {0} is outside the safe range [0.1, 2.0]")]
    GridOutsideSafeRange(f64),
    #[error("epsilon grid must be strictly increasing")]
    GridNotIncreasing,
    #[error("sensitivity Δf must be positive and finite, got {0}")]
    InvalidDeltaF(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no alternative satisfies the compliance cap {cap}")]
    NoFeasibleAlternative { cap: f64 },
    #[error("invalid compliance policy: {0}")]
    InvalidPolicy(String),
    #[error("unknown compliance policy `{0}`")]
    UnknownPolicy(String),
}

/// Slider positions: privacy 1–5, accuracy 1–5, compliance yes/no,
/// data sensitivity 1–3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreferenceProfile {
    pub privacy: u8,
    pub accuracy: u8,
    pub compliance_required: bool,
    pub sensitivity: u8,
}

impl PreferenceProfile {
    pub fn new(
        privacy: u8,
        accuracy: u8,
        compliance_required: bool,
        sensitivity: u8,
    ) -> Result<Self, McdaError> {
        let p = Self {
            privacy,
            accuracy,
            compliance_required,
            sensitivity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), McdaError> {
        let check = |name: &str, v: u8, max: u8| {
            if (1..=max).contains(&v) {
                Ok(())
            } else {
                Err(McdaError::InvalidProfile(format!(
                    "{name} must be in 1..={max}, got {v}"
                )))
            }
        };
        check("privacy", self.privacy, 5)?;
        check("accuracy", self.accuracy, 5)?;
        check("sensitivity", self.sensitivity, 3)
    }

    /// Table-1 style privacy-first stance (compliance on, high sensitivity).
    pub fn privacy_first() -> Self {
        Self {
            privacy: 5,
            accuracy: 1,
            compliance_required: true,
            sensitivity: 3,
        }
    }

    pub fn balanced() -> Self {
        Self {
            privacy: 3,
            accuracy: 3,
            compliance_required: false,
            sensitivity: 2,
        }
    }

    pub fn utility_first() -> Self {
        Self {
            privacy: 1,
            accuracy: 5,
            compliance_required: false,
            sensitivity: 1,
        }
    }

    /// Unnormalized weights in criterion order.
    pub fn raw_weights(&self) -> [f64; 4] {
        [
            f64::from(self.privacy),
            f64::from(self.accuracy),
            if self.compliance_required {
                COMPLIANCE_RAW_WEIGHT
            } else {
                0.0
            },
            f64::from(self.sensitivity),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionWeights {
    pub w_privacy: f64,
    pub w_accuracy: f64,
    pub w_compliance: f64,
    pub w_sensitivity: f64,
}

impl CriterionWeights {
    /// Divides non-negative raw weights by their sum.
    pub fn from_raw(raw: [f64; 4]) -> Result<Self, McdaError> {
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(McdaError::InvalidWeights(format!(
                "raw weights must be finite and non-negative: {raw:?}"
            )));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(McdaError::InvalidWeights("raw weights sum to zero".into()));
        }
        Ok(Self {
            w_privacy: raw[0] / total,
            w_accuracy: raw[1] / total,
            w_compliance: raw[2] / total,
            w_sensitivity: raw[3] / total,
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.w_privacy,
            self.w_accuracy,
            self.w_compliance,
            self.w_sensitivity,
        ]
    }
}

pub fn normalize_weights(profile: &PreferenceProfile) -> Result<CriterionWeights, McdaError> {
    profile.validate()?;
    CriterionWeights::from_raw(profile.raw_weights())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub orientation: Orientation,
}

impl Criterion {
    pub fn new(name: &str, orientation: Orientation) -> Self {
        Self {
            name: name.to_string(),
            orientation,
        }
    }
}

/// Alternatives (ε values) × criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionMatrix {
    alternatives: Vec<f64>,
    criteria: Vec<Criterion>,
    values: Vec<Vec<f64>>,
}

impl DecisionMatrix {
    pub fn new(
        alternatives: Vec<f64>,
        criteria: Vec<Criterion>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, McdaError> {
        validate_grid(&alternatives)?;
        if criteria.is_empty() {
            return Err(McdaError::DimensionMismatch("no criteria".into()));
        }
        if values.len() != alternatives.len() {
            return Err(McdaError::DimensionMismatch(format!(
                "{} alternatives but {} value rows",
                alternatives.len(),
                values.len()
            )));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != criteria.len() {
                return Err(McdaError::DimensionMismatch(format!(
                    "row {i} has {} values for {} criteria",
                    row.len(),
                    criteria.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(McdaError::DimensionMismatch(format!(
                    "row {i} contains negative or non-finite values"
                )));
            }
        }
        Ok(Self {
            alternatives,
            criteria,
            values,
        })
    }

    pub fn alternatives(&self) -> &[f64] {
        &self.alternatives
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn orientations(&self) -> Vec<Orientation> {
        self.criteria.iter().map(|c| c.orientation).collect()
    }
}

/// Checks an ε grid is nonempty, strictly increasing and inside the safe range.
pub fn validate_grid(grid: &[f64]) -> Result<(), McdaError> {
    if grid.is_empty() {
        return Err(McdaError::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|e| {
        !e.is_finite() || **e < SAFE_MIN_EPSILON - EPS_TOL || **e > SAFE_MAX_EPSILON + EPS_TOL
    }) {
        return Err(McdaError::GridOutsideSafeRange(bad));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(McdaError::GridNotIncreasing);
    }
    Ok(())
}

pub fn build_decision_matrix(
    grid: &[f64],
    delta_f: f64,
    sensitivity: u8,
    policy: Option<&CompliancePolicy>,
) -> Result<DecisionMatrix, McdaError> {
    validate_grid(grid)?;
    if !(delta_f.is_finite() && delta_f > 0.0) {
        return Err(McdaError::InvalidDeltaF(delta_f));
    }
    if !(1..=3).contains(&sensitivity) {
        return Err(McdaError::InvalidProfile(format!(
            "sensitivity must be in 1..=3, got {sensitivity}"
        )));
    }
    let s = f64::from(sensitivity);
    let criteria = vec![
        Criterion::new("privacy_loss", Orientation::Cost),
        Criterion::new("precision", Orientation::Benefit),
        Criterion::new("compliance", Orientation::Benefit),
        Criterion::new("reidentification_risk", Orientation::Cost),
    ];
    let values = grid
        .iter()
        .map(|&eps| {
            let leakage = eps.exp_m1();
            let compliant = policy.is_none_or(|p| eps <= p.epsilon_cap + EPS_TOL);
            vec![
                leakage,
                eps / delta_f,
                if compliant { 1.0 } else { 0.0 },
                s * leakage,
            ]
        })
        .collect();
    DecisionMatrix::new(grid.to_vec(), criteria, values)
}

/// Everything the selection computed, so callers can show the full trade-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub epsilon_star: f64,
    pub alternatives: Vec<f64>,
    pub closeness: Vec<f64>,
    pub d_plus: Vec<f64>,
    pub d_minus: Vec<f64>,
    /// Whether each alternative was allowed to win (compliance hard filter).
    pub eligible: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_applied: Option<f64>,
    pub weights_used: CriterionWeights,
    pub matrix: DecisionMatrix,
    pub normalized: Vec<Vec<f64>>,
    pub weighted: Vec<Vec<f64>>,
    pub ideal: Vec<f64>,
    pub anti_ideal: Vec<f64>,
}

pub fn topsis_select(
    matrix: &DecisionMatrix,
    weights: &CriterionWeights,
) -> Result<SelectionResult, McdaError> {
    select_with_weights(matrix, &weights.as_array(), *weights, None)
}

fn select_with_weights(
    matrix: &DecisionMatrix,
    weights: &[f64],
    weights_used: CriterionWeights,
    cap: Option<f64>,
) -> Result<SelectionResult, McdaError> {
    if weights.len() != matrix.criteria().len() {
        return Err(McdaError::DimensionMismatch(format!(
            "{} weights for {} criteria",
            weights.len(),
            matrix.criteria().len()
        )));
    }
    let outcome = topsis::evaluate(
        matrix.alternatives(),
        matrix.values(),
        &matrix.orientations(),
        weights,
    );
    let eligible: Vec<bool> = matrix
        .alternatives()
        .iter()
        .map(|&e| cap.is_none_or(|c| e <= c + EPS_TOL))
        .collect();
    let best = topsis::pick_best(matrix.alternatives(), &outcome.closeness, &eligible)
        .ok_or(McdaError::NoFeasibleAlternative {
            cap: cap.unwrap_or(f64::NAN),
        })?;
    Ok(SelectionResult {
        epsilon_star: matrix.alternatives()[best],
        alternatives: matrix.alternatives().to_vec(),
        closeness: outcome.closeness,
        d_plus: outcome.d_plus,
        d_minus: outcome.d_minus,
        eligible,
        cap_applied: cap,
        weights_used,
        matrix: matrix.clone(),
        normalized: outcome.normalized,
        weighted: outcome.weighted,
        ideal: outcome.ideal,
        anti_ideal: outcome.anti_ideal,
    })
}

/// Weights, matrix over the default grid, TOPSIS, then the compliance hard
/// filter when the profile requires compliance and a policy is in force.
pub fn select_epsilon(
    profile: &PreferenceProfile,
    delta_f: f64,
    policy: Option<&CompliancePolicy>,
) -> Result<SelectionResult, McdaError> {
    select_epsilon_on_grid(profile, &DEFAULT_GRID, delta_f, policy)
}

pub fn select_epsilon_on_grid(
    profile: &PreferenceProfile,
    grid: &[f64],
    delta_f: f64,
    policy: Option<&CompliancePolicy>,
) -> Result<SelectionResult, McdaError> {
    let weights = normalize_weights(profile)?;
    let matrix = build_decision_matrix(grid, delta_f, profile.sensitivity, policy)?;
    let cap = policy
        .filter(|_| profile.compliance_required)
        .map(|p| p.epsilon_cap);
    select_with_weights(&matrix, &weights.as_array(), weights, cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn weights_privacy_first_by_hand() {
        let w = normalize_weights(&PreferenceProfile::new(5, 1, true, 3).unwrap()).unwrap();
        let expected = [5.0 / 12.0, 1.0 / 12.0, 3.0 / 12.0, 3.0 / 12.0];
        for (a, b) in w.as_array().iter().zip(expected) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn weights_all_minimum_by_hand() {
        let w = normalize_weights(&PreferenceProfile::new(1, 1, false, 1).unwrap()).unwrap();
        let expected = [1.0 / 3.0, 1.0 / 3.0, 0.0, 1.0 / 3.0];
        for (a, b) in w.as_array().iter().zip(expected) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn weights_symmetric_sliders() {
        let w = CriterionWeights::from_raw([5.0, 5.0, 0.0, 5.0]).unwrap();
        assert_eq!(w.w_privacy, w.w_accuracy);
        assert!(close(w.w_privacy, 5.0 / 15.0));
    }

    #[test]
    fn weights_scale_invariant() {
        for p in PROFILES() {
            let raw = p.raw_weights();
            let a = CriterionWeights::from_raw(raw).unwrap();
            let b = CriterionWeights::from_raw(raw.map(|w| w * 2.0)).unwrap();
            assert_eq!(a, b);
            assert!(close(a.as_array().iter().sum::<f64>(), 1.0));
        }
    }

    #[allow(non_snake_case)]
    fn PROFILES() -> Vec<PreferenceProfile> {
        let mut out = Vec::new();
        for privacy in 1..=5 {
            for accuracy in 1..=5 {
                for compliance_required in [false, true] {
                    for sensitivity in 1..=3 {
                        out.push(PreferenceProfile {
                            privacy,
                            accuracy,
                            compliance_required,
                            sensitivity,
                        });
                    }
                }
            }
        }
        out
    }

    #[test]
    fn profile_range_validation() {
        assert!(PreferenceProfile::new(6, 1, false, 1).is_err());
        assert!(PreferenceProfile::new(0, 1, false, 1).is_err());
        assert!(PreferenceProfile::new(1, 1, false, 4).is_err());
        assert!(PreferenceProfile::new(5, 5, true, 3).is_ok());
    }

    #[test]
    fn matrix_two_point_grid_by_formula() {
        let m = build_decision_matrix(&[0.1, 2.0], 10.0, 1, None).unwrap();
        let expect = [
            [0.1f64.exp() - 1.0, 0.01, 1.0, 0.1f64.exp() - 1.0],
            [2.0f64.exp() - 1.0, 0.2, 1.0, 2.0f64.exp() - 1.0],
        ];
        for (row, exp) in m.values().iter().zip(expect) {
            for (a, b) in row.iter().zip(exp) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
        assert_eq!(m.criteria()[0].orientation, Orientation::Cost);
        assert_eq!(m.criteria()[1].orientation, Orientation::Benefit);
    }

    #[test]
    fn compliance_column_is_indicator() {
        let standard = CompliancePolicy::new("standard", 1.0, "").unwrap();
        let m = build_decision_matrix(&DEFAULT_GRID, 10.0, 2, Some(&standard)).unwrap();
        assert_eq!(m.column(2), vec![1.0, 1.0, 1.0, 0.0, 0.0]);
        let m = build_decision_matrix(&DEFAULT_GRID, 10.0, 2, None).unwrap();
        assert_eq!(m.column(2), vec![1.0; 5]);
    }

    #[test]
    fn risk_column_linear_in_sensitivity() {
        let m1 = build_decision_matrix(&DEFAULT_GRID, 10.0, 1, None).unwrap();
        let m3 = build_decision_matrix(&DEFAULT_GRID, 10.0, 3, None).unwrap();
        for (a, b) in m1.column(3).iter().zip(m3.column(3)) {
            assert_eq!(a * 3.0, b);
        }
    }

    #[test]
    fn grid_validation() {
        assert_eq!(
            build_decision_matrix(&[], 10.0, 1, None).unwrap_err(),
            McdaError::EmptyGrid
        );
        assert_eq!(
            build_decision_matrix(&[0.1, 5.0], 10.0, 1, None).unwrap_err(),
            McdaError::GridOutsideSafeRange(5.0)
        );
        assert_eq!(
            build_decision_matrix(&[0.05], 10.0, 1, None).unwrap_err(),
            McdaError::GridOutsideSafeRange(0.05)
        );
        assert_eq!(
            build_decision_matrix(&[1.0, 0.5], 10.0, 1, None).unwrap_err(),
            McdaError::GridNotIncreasing
        );
        assert!(build_decision_matrix(&[1.0], 0.0, 1, None).is_err());
    }

    #[test]
    fn identical_rows_tie_toward_smaller_epsilon() {
        let criteria = vec![
            Criterion::new("a", Orientation::Benefit),
            Criterion::new("b", Orientation::Cost),
        ];
        let m = DecisionMatrix::new(
            vec![0.5, 1.0, 1.5],
            criteria,
            vec![vec![3.0, 1.0], vec![3.0, 1.0], vec![1.0, 2.0]],
        )
        .unwrap();
        let w = [0.5, 0.5];
        let r = select_with_weights(&m, &w, CriterionWeights::from_raw([1.0; 4]).unwrap(), None)
            .unwrap();
        assert_eq!(r.closeness[0], r.closeness[1]);
        assert_eq!(r.epsilon_star, 0.5);
    }

    #[test]
    fn weight_count_must_match_criteria() {
        let m = build_decision_matrix(&DEFAULT_GRID, 10.0, 1, None).unwrap();
        let w = CriterionWeights::from_raw([1.0; 4]).unwrap();
        let err = select_with_weights(&m, &[0.5, 0.5], w, None).unwrap_err();
        assert!(matches!(err, McdaError::DimensionMismatch(_)));
    }

    #[test]
    fn table_one_profiles() {
        let open = CompliancePolicy::new("open", 2.0, "").unwrap();
        let r = select_epsilon(&PreferenceProfile::privacy_first(), 10.0, Some(&open)).unwrap();
        assert_eq!(r.epsilon_star, 0.1);
        assert_eq!(r.cap_applied, Some(2.0));
        let r = select_epsilon(&PreferenceProfile::balanced(), 10.0, None).unwrap();
        assert_eq!(r.epsilon_star, 1.0);
        let r = select_epsilon(&PreferenceProfile::utility_first(), 10.0, None).unwrap();
        assert_eq!(r.epsilon_star, 2.0);
        assert!(r.cap_applied.is_none());
    }

    #[test]
    fn closeness_identity_holds_per_alternative() {
        let r = select_epsilon(&PreferenceProfile::balanced(), 10.0, None).unwrap();
        for i in 0..5 {
            let denom = r.d_plus[i] + r.d_minus[i];
            assert!(denom > 0.0);
            assert!((r.closeness[i] - r.d_minus[i] / denom).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&r.closeness[i]));
        }
    }

    #[test]
    fn hard_cap_filters_even_utility_first() {
        let strict = CompliancePolicy::new("strict", 0.5, "").unwrap();
        for accuracy in 1..=5 {
            let p = PreferenceProfile::new(1, accuracy, true, 1).unwrap();
            let r = select_epsilon(&p, 10.0, Some(&strict)).unwrap();
            assert!(r.epsilon_star <= 0.5);
            assert_eq!(r.eligible, vec![true, true, false, false, false]);
        }
    }

    #[test]
    fn policy_ignored_without_compliance_flag() {
        let strict = CompliancePolicy::new("strict", 0.5, "").unwrap();
        let r = select_epsilon(&PreferenceProfile::utility_first(), 10.0, Some(&strict)).unwrap();
        assert_eq!(r.epsilon_star, 2.0);
        assert!(r.cap_applied.is_none());
    }

    #[test]
    fn no_feasible_alternative_when_cap_below_grid() {
        let p = PreferenceProfile::new(1, 5, true, 1).unwrap();
        let policy = CompliancePolicy::new_unchecked("tiny", 0.1, "");
        let r = select_epsilon_on_grid(&p, &[0.5, 1.0], 10.0, Some(&policy));
        assert!(matches!(r, Err(McdaError::NoFeasibleAlternative { .. })));
    }

    #[test]
    fn monotone_over_profile_grid() {
        let policies = [
            None,
            Some(CompliancePolicy::new("strict", 0.5, "").unwrap()),
            Some(CompliancePolicy::new("standard", 1.0, "").unwrap()),
            Some(CompliancePolicy::new("open", 2.0, "").unwrap()),
        ];
        for policy in &policies {
            for p in PROFILES() {
                let eps = select_epsilon(&p, 10.0, policy.as_ref()).unwrap().epsilon_star;
                if p.privacy < 5 {
                    let up = PreferenceProfile {
                        privacy: p.privacy + 1,
                        ..p
                    };
                    let e2 = select_epsilon(&up, 10.0, policy.as_ref()).unwrap().epsilon_star;
                    assert!(e2 <= eps, "{p:?} privacy+1: {eps} -> {e2}");
                }
                if p.accuracy < 5 {
                    let up = PreferenceProfile {
                        accuracy: p.accuracy + 1,
                        ..p
                    };
                    let e2 = select_epsilon(&up, 10.0, policy.as_ref()).unwrap().epsilon_star;
                    assert!(e2 >= eps, "{p:?} accuracy+1: {eps} -> {e2}");
                }
            }
        }
    }
}

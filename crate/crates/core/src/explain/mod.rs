//! Impact reports for a release: a 1–5 privacy rating, narrative, caveats
//! and refinement suggestions, from either an external LLM or a
//! deterministic template.

mod llm;
mod template;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use llm::{parse_response, LlmConfig, LlmProvider, ParsedResponse, PROMPT_TEMPLATE, PROMPT_VERSION};
pub use template::{template_report, template_score, SCORE_ANCHORS};

use crate::mcda::{PreferenceProfile, SAFE_MAX_EPSILON, SAFE_MIN_EPSILON};

/// Phrases a report must never contain.
pub const FORBIDDEN_CLAIMS: &[&str] = &[
    "zero risk",
    "no risk",
    "zero re-identification",
    "no re-identification risk",
    "impossible to re-identify",
    "cannot be re-identified",
    "can never be re-identified",
    "completely anonymous",
    "fully anonymous",
    "guaranteed anonymity",
    "100% private",
    "perfect privacy",
];

/// Relative MAE deviation above which a suggestion is mandatory.
pub const MAE_DEVIATION_THRESHOLD: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplainError {
    #[error("epsilon {0} is outside the safe range [0.1, 2.0]")]
    EpsilonOutsideSafeRange(f64),
    #[error("invalid impact context: {0}")]
    InvalidContext(String),
    #[error("explanation provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("malformed provider response: {0}")]
    MalformedProviderResponse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub series_count: usize,
    pub timestamp_count: usize,
    pub unit_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactContext {
    pub epsilon: f64,
    pub delta_f: f64,
    pub mae: f64,
    pub expected_mae: f64,
    pub dataset_summary: DatasetSummary,
    pub profile: PreferenceProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_applied: Option<f64>,
    pub remaining_budget: f64,
}

impl ImpactContext {
    pub fn validate(&self) -> Result<(), ExplainError> {
        let fields = [
            ("epsilon", self.epsilon),
            ("delta_f", self.delta_f),
            ("mae", self.mae),
            ("expected_mae", self.expected_mae),
            ("remaining_budget", self.remaining_budget),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ExplainError::InvalidContext(format!("{name} is {v}")));
        }
        if self.cap_applied.is_some_and(|c| !c.is_finite()) {
            return Err(ExplainError::InvalidContext("cap_applied is not finite".into()));
        }
        if !(SAFE_MIN_EPSILON..=SAFE_MAX_EPSILON).contains(&self.epsilon) {
            return Err(ExplainError::EpsilonOutsideSafeRange(self.epsilon));
        }
        self.profile
            .validate()
            .map_err(|e| ExplainError::InvalidContext(e.to_string()))
    }

    pub fn relative_mae_deviation(&self) -> f64 {
        if self.expected_mae == 0.0 {
            return 0.0;
        }
        (self.mae - self.expected_mae).abs() / self.expected_mae
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    ExternalLlm,
    #[default]
    Template,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "external_llm" | "external" | "llm" => Ok(Self::ExternalLlm),
            "template" => Ok(Self::Template),
            other => Err(format!("unknown provider `{other}` (expected template or external_llm)")),
        }
    }
}

/// Absolute slider targets; unset fields stay as they are.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileChange {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compliance_required: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<u8>,
}

impl ProfileChange {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, profile: &PreferenceProfile) -> PreferenceProfile {
        PreferenceProfile {
            privacy: self.privacy.unwrap_or(profile.privacy),
            accuracy: self.accuracy.unwrap_or(profile.accuracy),
            compliance_required: self
                .compliance_required
                .unwrap_or(profile.compliance_required),
            sensitivity: self.sensitivity.unwrap_or(profile.sensitivity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementSuggestion {
    pub description: String,
    pub suggested_profile_change: ProfileChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub privacy_score: f64,
    pub narrative: String,
    pub caveats: Vec<String>,
    pub refinement_suggestions: Vec<RefinementSuggestion>,
    pub provider: ProviderKind,
}

/// Returns the first forbidden claim found in `text`, if any.
pub fn forbidden_claim(text: &str) -> Option<&'static str> {
    let lower = text.to_lowercase();
    FORBIDDEN_CLAIMS.iter().copied().find(|c| lower.contains(c))
}

/// Dispatches to the chosen provider. The external path retries once and
/// then falls back to the template unless `fallback_enabled` is off.
#[derive(Debug, Clone)]
pub struct ReportGenerator {
    llm: Option<LlmProvider>,
    fallback_enabled: bool,
}

impl Default for ReportGenerator {
    fn default() -> Self {
        Self::template_only()
    }
}

impl ReportGenerator {
    pub fn new(llm: Option<LlmProvider>, fallback_enabled: bool) -> Self {
        Self {
            llm,
            fallback_enabled,
        }
    }

    pub fn template_only() -> Self {
        Self::new(None, true)
    }

    pub fn has_external(&self) -> bool {
        self.llm.is_some()
    }

    pub fn generate_report(
        &self,
        context: &ImpactContext,
        choice: ProviderKind,
    ) -> Result<ImpactReport, ExplainError> {
        context.validate()?;
        let base = template_report(context)?;
        if choice == ProviderKind::Template {
            return Ok(base);
        }
        let Some(llm) = &self.llm else {
            return self.fall_back(base, "no external provider is configured".into());
        };
        let raw = match llm.complete(context) {
            Ok(raw) => raw,
            Err(e) => return self.fall_back(base, e.to_string()),
        };
        let parsed = match parse_response(&raw) {
            Ok(p) => p,
            Err(e) => return self.fall_back(base, e.to_string()),
        };
        Ok(merge_external(base, parsed))
    }

    fn fall_back(&self, mut base: ImpactReport, reason: String) -> Result<ImpactReport, ExplainError> {
        if !self.fallback_enabled {
            return Err(ExplainError::ProviderUnavailable(reason));
        }
        tracing::warn!(%reason, "external explanation failed, using template");
        base.caveats.push(format!(
            "External explanation unavailable ({reason}); this report was generated from the deterministic template."
        ));
        Ok(base)
    }
}

fn merge_external(base: ImpactReport, parsed: ParsedResponse) -> ImpactReport {
    let mut caveats = base.caveats.clone();
    let privacy_score = match parsed.privacy_score {
        Some(s) => s.clamp(1.0, 5.0),
        None => {
            caveats.push(format!(
                "The external provider returned no usable privacy score; the template score {:.1} is shown instead.",
                base.privacy_score
            ));
            base.privacy_score
        }
    };
    let narrative = match forbidden_claim(&parsed.narrative) {
        Some(claim) => {
            caveats.push(format!(
                "The external narrative was withheld because it overstated the protection (\"{claim}\")."
            ));
            base.narrative.clone()
        }
        None if parsed.narrative.trim().is_empty() => base.narrative.clone(),
        None => parsed.narrative,
    };
    for c in parsed.caveats {
        if forbidden_claim(&c).is_none() && !caveats.contains(&c) {
            caveats.push(c);
        }
    }
    ImpactReport {
        privacy_score,
        narrative,
        caveats,
        refinement_suggestions: base.refinement_suggestions,
        provider: ProviderKind::ExternalLlm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn context(epsilon: f64) -> ImpactContext {
        ImpactContext {
            epsilon,
            delta_f: 10.0,
            mae: 10.0 / epsilon,
            expected_mae: 10.0 / epsilon,
            dataset_summary: DatasetSummary {
                series_count: 200,
                timestamp_count: 144,
                unit_label: "W".into(),
            },
            profile: PreferenceProfile::balanced(),
            cap_applied: None,
            remaining_budget: 3.0,
        }
    }

    #[test]
    fn template_choice_is_deterministic() {
        let g = ReportGenerator::template_only();
        let a = g.generate_report(&context(1.0), ProviderKind::Template).unwrap();
        let b = g.generate_report(&context(1.0), ProviderKind::Template).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.privacy_score, 3.2);
        assert_eq!(a.provider, ProviderKind::Template);
    }

    #[test]
    fn unconfigured_external_falls_back_or_errors() {
        let ctx = context(0.1);
        let r = ReportGenerator::new(None, true)
            .generate_report(&ctx, ProviderKind::ExternalLlm)
            .unwrap();
        assert_eq!(r.provider, ProviderKind::Template);
        assert_eq!(r.privacy_score, 4.8);
        assert!(r.caveats.iter().any(|c| c.contains("template")));
        let err = ReportGenerator::new(None, false)
            .generate_report(&ctx, ProviderKind::ExternalLlm)
            .unwrap_err();
        assert!(matches!(err, ExplainError::ProviderUnavailable(_)));
    }

    #[test]
    fn invalid_contexts_rejected() {
        let g = ReportGenerator::template_only();
        let mut ctx = context(1.0);
        ctx.epsilon = 3.0;
        assert_eq!(
            g.generate_report(&ctx, ProviderKind::Template).unwrap_err(),
            ExplainError::EpsilonOutsideSafeRange(3.0)
        );
        let mut ctx = context(1.0);
        ctx.mae = f64::NAN;
        assert!(matches!(
            g.generate_report(&ctx, ProviderKind::Template),
            Err(ExplainError::InvalidContext(_))
        ));
    }

    #[test]
    fn merge_clamps_and_filters() {
        let base = template_report(&context(1.0)).unwrap();
        let merged = merge_external(
            base.clone(),
            ParsedResponse {
                privacy_score: Some(9.0),
                narrative: "This data is completely anonymous.".into(),
                caveats: vec!["Noise hides small appliances.".into(), "No risk at all.".into()],
            },
        );
        assert_eq!(merged.privacy_score, 5.0);
        assert_eq!(merged.narrative, base.narrative);
        assert!(merged.caveats.iter().any(|c| c.contains("withheld")));
        assert!(merged.caveats.iter().any(|c| c == "Noise hides small appliances."));
        assert!(merged.caveats.iter().all(|c| !c.contains("No risk at all")));
        assert_eq!(merged.provider, ProviderKind::ExternalLlm);
    }

    #[test]
    fn missing_score_uses_template_with_caveat() {
        let base = template_report(&context(0.5)).unwrap();
        let merged = merge_external(
            base.clone(),
            ParsedResponse {
                privacy_score: None,
                narrative: "Moderate protection.".into(),
                caveats: vec![],
            },
        );
        assert_eq!(merged.privacy_score, base.privacy_score);
        assert_eq!(merged.narrative, "Moderate protection.");
        assert!(merged.caveats.len() > base.caveats.len());
    }

    #[test]
    fn profile_change_applies_only_set_fields() {
        let change = ProfileChange {
            privacy: Some(5),
            ..Default::default()
        };
        let p = change.apply(&PreferenceProfile::balanced());
        assert_eq!((p.privacy, p.accuracy), (5, 3));
        assert!(ProfileChange::default().is_empty());
    }
}

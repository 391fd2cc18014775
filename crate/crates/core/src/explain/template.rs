use super::{
    ExplainError, ImpactContext, ImpactReport, ProfileChange, ProviderKind, RefinementSuggestion,
    MAE_DEVIATION_THRESHOLD,
};
use crate::mcda::{SAFE_MAX_EPSILON, SAFE_MIN_EPSILON};

/// `(ε, score)` anchor points; scores between anchors are interpolated
/// linearly in `ln ε`.
pub const SCORE_ANCHORS: [(f64, f64); 3] = [(0.1, 4.8), (1.0, 3.2), (2.0, 2.1)];

pub fn template_score(epsilon: f64) -> Result<f64, ExplainError> {
    if !(SAFE_MIN_EPSILON..=SAFE_MAX_EPSILON).contains(&epsilon) {
        return Err(ExplainError::EpsilonOutsideSafeRange(epsilon));
    }
    let (lo, hi) = if epsilon <= SCORE_ANCHORS[1].0 {
        (SCORE_ANCHORS[0], SCORE_ANCHORS[1])
    } else {
        (SCORE_ANCHORS[1], SCORE_ANCHORS[2])
    };
    let t = (epsilon.ln() - lo.0.ln()) / (hi.0.ln() - lo.0.ln());
    // convex-combination form keeps anchor values exact at t = 0 and t = 1
    let score = (1.0 - t) * lo.1 + t * hi.1;
    Ok(score.clamp(1.0, 5.0))
}

fn band(score: f64) -> &'static str {
    if score >= 4.0 {
        "strong protection: individual consumption patterns are heavily masked, at a large cost in per-reading accuracy"
    } else if score >= 3.0 {
        "moderate protection: daily load shapes remain visible in aggregate while single readings are blurred"
    } else {
        "weaker protection: aggregate trends and many individual peaks remain clearly discernible"
    }
}

pub fn template_report(ctx: &ImpactContext) -> Result<ImpactReport, ExplainError> {
    ctx.validate()?;
    let score = template_score(ctx.epsilon)?;
    let unit = &ctx.dataset_summary.unit_label;
    let scale = ctx.delta_f / ctx.epsilon;

    let mut narrative = format!(
        "Released {} series x {} timestamps at epsilon = {}. Every reading received independent \
         Laplace noise with scale {:.3} {unit}; the observed mean absolute error is {:.3} {unit} \
         against an expected {:.3} {unit}. Privacy rating {:.1}/5, {}.",
        ctx.dataset_summary.series_count,
        ctx.dataset_summary.timestamp_count,
        ctx.epsilon,
        scale,
        ctx.mae,
        ctx.expected_mae,
        score,
        band(score),
    );
    if let Some(cap) = ctx.cap_applied {
        narrative.push_str(&format!(
            " A compliance cap of epsilon <= {cap} constrained the selection."
        ));
    }
    narrative.push_str(&format!(
        " Remaining privacy budget: {:.3}.",
        ctx.remaining_budget
    ));

    let mut caveats = vec![
        "The privacy rating summarises the configured epsilon; it is not a measured \
         probability of re-identification, and some residual risk always remains."
            .to_string(),
        "Noise is drawn independently per reading, so temporal correlation and periodic \
         patterns in the series are not accounted for."
            .to_string(),
    ];
    if scale >= ctx.delta_f {
        caveats.push(
            "At this noise level single readings are dominated by noise; forecasting and \
             anomaly detection on individual series will be unreliable."
                .to_string(),
        );
    }

    Ok(ImpactReport {
        privacy_score: score,
        narrative,
        caveats,
        refinement_suggestions: suggestions(ctx),
        provider: ProviderKind::Template,
    })
}

fn suggestions(ctx: &ImpactContext) -> Vec<RefinementSuggestion> {
    let p = &ctx.profile;
    let mut out = Vec::new();
    let deviation = ctx.relative_mae_deviation();
    if deviation > MAE_DEVIATION_THRESHOLD {
        let description = format!(
            "Observed error differs from the expected {:.3} by {:.0}%. Check the clamp bounds \
             or, if utility matters more, raise the accuracy preference.",
            ctx.expected_mae,
            deviation * 100.0
        );
        out.push(RefinementSuggestion {
            description,
            suggested_profile_change: ProfileChange {
                accuracy: Some((p.accuracy + 1).min(5)),
                ..Default::default()
            },
        });
    }
    if ctx.remaining_budget < SAFE_MIN_EPSILON {
        out.push(RefinementSuggestion {
            description: format!(
                "Only {:.3} of the privacy budget remains, below the smallest allowed epsilon \
                 of {SAFE_MIN_EPSILON}; no further releases are possible on this dataset.",
                ctx.remaining_budget
            ),
            suggested_profile_change: ProfileChange::default(),
        });
    }
    if ctx.epsilon >= 1.5 && p.privacy < 5 {
        out.push(RefinementSuggestion {
            description: "Raise the privacy preference to trade some accuracy for stronger protection."
                .to_string(),
            suggested_profile_change: ProfileChange {
                privacy: Some(p.privacy + 1),
                ..Default::default()
            },
        });
    } else if ctx.epsilon <= 0.5 && p.accuracy < 5 {
        out.push(RefinementSuggestion {
            description: "Raise the accuracy preference if the noisy series are too distorted \
                          for planning use."
                .to_string(),
            suggested_profile_change: ProfileChange {
                accuracy: Some(p.accuracy + 1),
                ..Default::default()
            },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::tests::context;
    use super::super::forbidden_claim;
    use super::*;

    #[test]
    fn anchors_are_exact() {
        assert_eq!(template_score(0.1).unwrap(), 4.8);
        assert_eq!(template_score(1.0).unwrap(), 3.2);
        assert_eq!(template_score(2.0).unwrap(), 2.1);
    }

    #[test]
    fn interpolation_matches_formula() {
        // 4.8 + (3.2 - 4.8) * (ln 0.5 - ln 0.1) / (ln 1.0 - ln 0.1) = 3.68165
        let s = template_score(0.5).unwrap();
        assert!((s - 3.681_647_993_062_37).abs() < 1e-9, "{s}");
        // 3.2 + (2.1 - 3.2) * ln 1.5 / ln 2 = 2.55654
        let s = template_score(1.5).unwrap();
        assert!((s - 2.556_541_249_206_728).abs() < 1e-9, "{s}");
        let mid = template_score(0.3).unwrap();
        assert!(mid < 4.8 && mid > 3.2);
    }

    #[test]
    fn strictly_decreasing_on_safe_range() {
        let grid: Vec<f64> = (0..100).map(|i| 0.1 + 1.9 * i as f64 / 99.0).collect();
        let scores: Vec<f64> = grid.iter().map(|&e| template_score(e).unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[1] < w[0]));
        assert!(scores.iter().all(|s| (1.0..=5.0).contains(s)));
    }

    #[test]
    fn outside_range_is_error() {
        assert!(template_score(0.09).is_err());
        assert!(template_score(2.01).is_err());
    }

    #[test]
    fn report_always_has_caveats_and_no_forbidden_claims() {
        for eps in [0.1, 0.5, 1.0, 1.5, 2.0] {
            let r = template_report(&context(eps)).unwrap();
            assert!(!r.caveats.is_empty());
            assert!(forbidden_claim(&r.narrative).is_none(), "{}", r.narrative);
            assert!(r.caveats.iter().all(|c| forbidden_claim(c).is_none()));
        }
    }

    #[test]
    fn suggestions_required_on_large_deviation() {
        let mut ctx = context(1.0);
        ctx.mae = 14.0;
        let r = template_report(&ctx).unwrap();
        assert!(r
            .refinement_suggestions
            .iter()
            .any(|s| s.description.contains("40%")));
    }

    #[test]
    fn suggestions_required_when_budget_nearly_gone() {
        let mut ctx = context(1.0);
        ctx.remaining_budget = 0.05;
        let r = template_report(&ctx).unwrap();
        assert!(!r.refinement_suggestions.is_empty());
        assert!(r.refinement_suggestions[0].suggested_profile_change.is_empty());
    }

    #[test]
    fn cap_is_mentioned() {
        let mut ctx = context(0.5);
        ctx.cap_applied = Some(0.5);
        assert!(template_report(&ctx).unwrap().narrative.contains("cap"));
    }
}

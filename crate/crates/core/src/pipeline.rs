//! The select → release → measure → explain sequence shared by the CLI and
//! the HTTP service.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{utility_report, AnalysisError, UtilityReport};
use crate::dataset::{DatasetError, VersionId, VersionStore};
use crate::dp::{commit_release, prepare_release, BudgetLedger, DpError};
use crate::explain::{
    DatasetSummary, ExplainError, ImpactContext, ImpactReport, ProviderKind, ReportGenerator,
};
use crate::mcda::{McdaError, PreferenceProfile, SelectionResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Selection(#[from] McdaError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseOutcome {
    pub version_id: VersionId,
    pub parent_id: VersionId,
    pub epsilon: f64,
    pub seed: u64,
    pub utility: UtilityReport,
    pub impact: ImpactReport,
    pub remaining_budget: f64,
}

/// Inputs to one release beyond the store and ledger.
#[derive(Debug, Clone, Copy)]
pub struct ReleaseParams<'a> {
    pub source: VersionId,
    pub delta_f: f64,
    pub seed: u64,
    pub profile: &'a PreferenceProfile,
    pub selection: &'a SelectionResult,
    pub provider: ProviderKind,
}

/// Releases `source` at the selected ε. The noisy payload, its utility
/// report and its impact report are all computed before anything is stored,
/// so a failure at any step leaves the store and ledger untouched.
pub fn execute_release(
    store: &mut VersionStore,
    ledger: &mut BudgetLedger,
    generator: &ReportGenerator,
    params: ReleaseParams<'_>,
) -> Result<ReleaseOutcome, PipelineError> {
    let epsilon = params.selection.epsilon_star;
    let prepared = prepare_release(
        store,
        params.source,
        epsilon,
        params.delta_f,
        ledger,
        params.seed,
    )?;
    let original = store.get(params.source)?.payload();
    let utility = utility_report(original, prepared.payload(), prepared.provenance())?;
    let (series_count, timestamp_count) = original.shape();
    let remaining_budget = (ledger.remaining() - epsilon).max(0.0);
    let context = ImpactContext {
        epsilon,
        delta_f: params.delta_f,
        mae: utility.mae,
        expected_mae: utility.expected_mae,
        dataset_summary: DatasetSummary {
            series_count,
            timestamp_count,
            unit_label: original.unit_label().to_string(),
        },
        profile: *params.profile,
        cap_applied: params.selection.cap_applied,
        remaining_budget,
    };
    let impact = generator.generate_report(&context, params.provider)?;
    let version_id = commit_release(store, ledger, prepared)?;
    Ok(ReleaseOutcome {
        version_id,
        parent_id: params.source,
        epsilon,
        seed: params.seed,
        utility,
        impact,
        remaining_budget: ledger.remaining(),
    })
}

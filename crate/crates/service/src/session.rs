//! One participatory session: upload → select* → (release | sweep)*.
//! Everything here is synchronous; the HTTP layer handles locking.

use chrono::Utc;
use serde::{Deserialize, Serialize};

use pdp_core::analysis::{sweep_epsilon, SweepResult, DEFAULT_SEEDS_PER_POINT};
use pdp_core::api::{
    ApiError, ErrorCode, EventKind, HistoryEvent, HistoryResponse, LedgerSnapshot,
    PreferencesResponse, ReleaseResponse, VersionDescriptor,
};
use pdp_core::dataset::{
    ingest_csv_with, ClampBounds, DatasetVersion, IngestOptions, VersionId, VersionStore,
};
use pdp_core::dp::BudgetLedger;
use pdp_core::explain::{ProviderKind, ReportGenerator};
use pdp_core::mcda::{
    select_epsilon, CompliancePolicy, PreferenceProfile, SelectionResult, DEFAULT_GRID,
};
use pdp_core::pipeline::{execute_release, ReleaseParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dataset {
    bounds: ClampBounds,
    store: VersionStore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<CompliancePolicy>,
    ledger: BudgetLedger,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dataset: Option<Dataset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    current_profile: Option<PreferenceProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    last_selection: Option<SelectionResult>,
    history: Vec<HistoryEvent>,
}

/// Inputs for a sweep after defaults have been filled in.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub root: DatasetVersion,
    pub delta_f: f64,
    pub grid: Vec<f64>,
    pub seeds_per_point: usize,
    pub seed: u64,
}

impl SweepPlan {
    pub fn run(&self) -> Result<SweepResult, ApiError> {
        Ok(sweep_epsilon(
            &self.root,
            &self.grid,
            self.delta_f,
            self.seeds_per_point,
            self.seed,
        )?)
    }
}

impl Session {
    pub fn new(
        session_id: String,
        total_budget: f64,
        policy: Option<CompliancePolicy>,
    ) -> Result<Self, ApiError> {
        Ok(Self {
            session_id,
            policy,
            ledger: BudgetLedger::new(total_budget)?,
            dataset: None,
            current_profile: None,
            last_selection: None,
            history: Vec::new(),
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn policy(&self) -> Option<&CompliancePolicy> {
        self.policy.as_ref()
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn history(&self) -> &[HistoryEvent] {
        &self.history
    }

    fn record<T: Serialize>(&mut self, kind: EventKind, payload: &T) {
        let payload = serde_json::to_value(payload).expect("event payloads serialize");
        self.history.push(HistoryEvent {
            event_kind: kind,
            payload,
            timestamp: Utc::now(),
        });
    }

    fn dataset(&self) -> Result<&Dataset, ApiError> {
        self.dataset.as_ref().ok_or_else(|| {
            ApiError::new(ErrorCode::NoDatasetUploaded, "upload a dataset first")
        })
    }

    pub fn upload(
        &mut self,
        raw: &[u8],
        bounds: ClampBounds,
        options: &IngestOptions,
    ) -> Result<VersionDescriptor, ApiError> {
        if self.dataset.is_some() {
            return Err(ApiError::new(
                ErrorCode::DatasetAlreadyUploaded,
                "this session already has a dataset; create a new session for another upload",
            ));
        }
        let root = ingest_csv_with(raw, bounds, options)?;
        let descriptor = VersionDescriptor::describe(&root, bounds.delta_f());
        self.dataset = Some(Dataset {
            bounds,
            store: VersionStore::new(root),
        });
        self.record(EventKind::Upload, &descriptor);
        Ok(descriptor)
    }

    /// Free and repeatable; never touches the ledger.
    pub fn set_preferences(
        &mut self,
        profile: PreferenceProfile,
    ) -> Result<PreferencesResponse, ApiError> {
        let delta_f = self.dataset()?.bounds.delta_f();
        let selection = select_epsilon(&profile, delta_f, self.policy.as_ref())?;
        self.current_profile = Some(profile);
        self.last_selection = Some(selection.clone());
        let response = PreferencesResponse { profile, selection };
        self.record(EventKind::Selection, &response);
        Ok(response)
    }

    pub fn execute_release(
        &mut self,
        seed: u64,
        generator: &ReportGenerator,
        provider: ProviderKind,
    ) -> Result<ReleaseResponse, ApiError> {
        self.dataset()?;
        let (Some(profile), Some(selection)) = (&self.current_profile, &self.last_selection) else {
            return Err(ApiError::new(
                ErrorCode::NoSelection,
                "set preferences before releasing",
            ));
        };
        let dataset = self.dataset.as_mut().expect("checked above");
        let delta_f = dataset.bounds.delta_f();
        let outcome = execute_release(
            &mut dataset.store,
            &mut self.ledger,
            generator,
            ReleaseParams {
                source: 0,
                delta_f,
                seed,
                profile,
                selection,
                provider,
            },
        )?;
        let version = dataset.store.get(outcome.version_id)?;
        let response = ReleaseResponse {
            version: VersionDescriptor::describe(version, delta_f),
            seed: outcome.seed,
            utility: outcome.utility,
            impact: outcome.impact,
            ledger: LedgerSnapshot::from(&self.ledger),
        };
        self.record(EventKind::Release, &response);
        Ok(response)
    }

    /// Validates a sweep request and captures what it needs, so the
    /// computation can run without holding the session.
    pub fn plan_sweep(
        &self,
        grid: Option<Vec<f64>>,
        seeds_per_point: Option<usize>,
        seed: u64,
    ) -> Result<SweepPlan, ApiError> {
        let dataset = self.dataset()?;
        Ok(SweepPlan {
            root: dataset.store.root().clone(),
            delta_f: dataset.bounds.delta_f(),
            grid: grid.unwrap_or_else(|| DEFAULT_GRID.to_vec()),
            seeds_per_point: seeds_per_point.unwrap_or(DEFAULT_SEEDS_PER_POINT),
            seed,
        })
    }

    pub fn record_sweep(&mut self, result: &SweepResult) {
        self.record(EventKind::Sweep, result);
    }

    pub fn history_response(&self) -> HistoryResponse {
        let versions = match &self.dataset {
            Some(d) => d
                .store
                .iter()
                .map(|v| VersionDescriptor::describe(v, d.bounds.delta_f()))
                .collect(),
            None => Vec::new(),
        };
        HistoryResponse {
            session_id: self.session_id.clone(),
            events: self.history.clone(),
            ledger: LedgerSnapshot::from(&self.ledger),
            versions,
        }
    }

    /// CSV bytes of a version. Version 0 is the clamped upload and is only
    /// exported when `allow_raw` is set.
    pub fn export(&self, version_id: VersionId, allow_raw: bool) -> Result<Vec<u8>, ApiError> {
        let dataset = self.dataset()?;
        let version = dataset.store.get(version_id)?;
        if version.is_root() && !allow_raw {
            return Err(ApiError::new(
                ErrorCode::RawExportDisabled,
                "raw dataset export is disabled on this server",
            ));
        }
        Ok(version.payload().to_csv_bytes())
    }
}

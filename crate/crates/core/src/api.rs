//! JSON wire types of the HTTP API, shared by the server, the client and the
//! CLI's error reporting.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisError, SweepResult, UtilityReport};
use crate::dataset::{DatasetError, DatasetVersion, Provenance, VersionId};
use crate::dp::{BudgetLedger, DpError, LedgerEntry};
use crate::explain::{ExplainError, ImpactReport};
use crate::mcda::{CompliancePolicy, McdaError, PreferenceProfile, SelectionResult};
use crate::pipeline::PipelineError;

/// Closed set of error codes returned by the API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownSession,
    UnknownPolicy,
    UnknownVersion,
    DatasetAlreadyUploaded,
    NoDatasetUploaded,
    NoSelection,
    MalformedCsv,
    MissingValue,
    EmptyDataset,
    NonMonotonicTimestamps,
    IrregularStep,
    InvalidBounds,
    InvalidProfile,
    InvalidGrid,
    NoFeasibleAlternative,
    InvalidPolicy,
    InvalidBudget,
    InvalidRequest,
    EpsilonOutsideSafeRange,
    BudgetExceeded,
    NoisingNoisyData,
    RawExportDisabled,
    ProviderUnavailable,
    MalformedProviderResponse,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 25] = [
        Self::UnknownSession,
        Self::UnknownPolicy,
        Self::UnknownVersion,
        Self::DatasetAlreadyUploaded,
        Self::NoDatasetUploaded,
        Self::NoSelection,
        Self::MalformedCsv,
        Self::MissingValue,
        Self::EmptyDataset,
        Self::NonMonotonicTimestamps,
        Self::IrregularStep,
        Self::InvalidBounds,
        Self::InvalidProfile,
        Self::InvalidGrid,
        Self::NoFeasibleAlternative,
        Self::InvalidPolicy,
        Self::InvalidBudget,
        Self::InvalidRequest,
        Self::EpsilonOutsideSafeRange,
        Self::BudgetExceeded,
        Self::NoisingNoisyData,
        Self::RawExportDisabled,
        Self::ProviderUnavailable,
        Self::MalformedProviderResponse,
        Self::Internal,
    ];

    /// HTTP status the server uses for this code.
    pub fn http_status(self) -> u16 {
        use ErrorCode::*;
        match self {
            UnknownSession | UnknownPolicy | UnknownVersion => 404,
            DatasetAlreadyUploaded | NoDatasetUploaded | NoSelection | BudgetExceeded
            | NoisingNoisyData => 409,
            RawExportDisabled => 403,
            ProviderUnavailable => 503,
            MalformedProviderResponse => 502,
            Internal => 500,
            MalformedCsv | MissingValue | EmptyDataset | NonMonotonicTimestamps
            | IrregularStep | InvalidBounds => 422,
            InvalidProfile | InvalidGrid | NoFeasibleAlternative | InvalidPolicy
            | InvalidBudget | InvalidRequest | EpsilonOutsideSafeRange => 400,
        }
    }

    /// Whether repeating the request (possibly with corrected input) can
    /// succeed without any change to server state.
    pub fn retryable(self) -> bool {
        matches!(
            self,
            Self::MalformedCsv | Self::ProviderUnavailable | Self::Internal
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub retryable: bool,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            retryable: code.retryable(),
        }
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        let code = match e {
            DatasetError::MalformedCsv(_) => ErrorCode::MalformedCsv,
            DatasetError::MissingValue { .. } => ErrorCode::MissingValue,
            DatasetError::EmptyDataset(_) => ErrorCode::EmptyDataset,
            DatasetError::NonMonotonicTimestamps { .. } => ErrorCode::NonMonotonicTimestamps,
            DatasetError::IrregularStep { .. } => ErrorCode::IrregularStep,
            DatasetError::InvalidBounds { .. } => ErrorCode::InvalidBounds,
            DatasetError::UnknownVersion(_) => ErrorCode::UnknownVersion,
            DatasetError::ShapeMismatch { .. }
            | DatasetError::InvalidProvenance(_) => ErrorCode::Internal,
            DatasetError::InvalidGeneratorArgs(_) => ErrorCode::InvalidRequest,
        };
        Self::new(code, e.to_string())
    }
}

impl From<McdaError> for ApiError {
    fn from(e: McdaError) -> Self {
        let code = match e {
            McdaError::InvalidProfile(_) | McdaError::InvalidWeights(_) => ErrorCode::InvalidProfile,
            McdaError::EmptyGrid | McdaError::GridOutsideSafeRange(_) | McdaError::GridNotIncreasing => {
                ErrorCode::InvalidGrid
            }
            McdaError::InvalidDeltaF(_) => ErrorCode::InvalidBounds,
            McdaError::DimensionMismatch(_) => ErrorCode::Internal,
            McdaError::NoFeasibleAlternative { .. } => ErrorCode::NoFeasibleAlternative,
            McdaError::InvalidPolicy(_) => ErrorCode::InvalidPolicy,
            McdaError::UnknownPolicy(_) => ErrorCode::UnknownPolicy,
        };
        Self::new(code, e.to_string())
    }
}

impl From<DpError> for ApiError {
    fn from(e: DpError) -> Self {
        let code = match e {
            DpError::Dataset(inner) => return inner.into(),
            DpError::InvalidScale(_) => ErrorCode::InvalidBounds,
            DpError::InvalidCount => ErrorCode::InvalidRequest,
            DpError::InvalidBudget(_) => ErrorCode::InvalidBudget,
            DpError::EpsilonOutsideSafeRange(_) => ErrorCode::EpsilonOutsideSafeRange,
            DpError::BudgetExceeded { .. } => ErrorCode::BudgetExceeded,
            DpError::NoisingNoisyData(_) => ErrorCode::NoisingNoisyData,
        };
        Self::new(code, e.to_string())
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Grid(inner) => inner.into(),
            AnalysisError::Dp(inner) => inner.into(),
            AnalysisError::InvalidSeedCount => Self::new(ErrorCode::InvalidRequest, e.to_string()),
            other => Self::new(ErrorCode::Internal, other.to_string()),
        }
    }
}

impl From<ExplainError> for ApiError {
    fn from(e: ExplainError) -> Self {
        let code = match e {
            ExplainError::EpsilonOutsideSafeRange(_) => ErrorCode::EpsilonOutsideSafeRange,
            ExplainError::InvalidContext(_) => ErrorCode::Internal,
            ExplainError::ProviderUnavailable(_) => ErrorCode::ProviderUnavailable,
            ExplainError::MalformedProviderResponse(_) => ErrorCode::MalformedProviderResponse,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Dataset(e) => e.into(),
            PipelineError::Selection(e) => e.into(),
            PipelineError::Dp(e) => e.into(),
            PipelineError::Analysis(e) => e.into(),
            PipelineError::Explain(e) => e.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub total_budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<CompliancePolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionDescriptor {
    pub version_id: VersionId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<VersionId>,
    pub series_count: usize,
    pub timestamp_count: usize,
    pub delta_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl VersionDescriptor {
    pub fn describe(version: &DatasetVersion, delta_f: f64) -> Self {
        let (series_count, timestamp_count) = version.payload().shape();
        Self {
            version_id: version.version_id(),
            parent_id: version.parent_id(),
            series_count,
            timestamp_count,
            delta_f,
            provenance: version.provenance().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub total_budget: f64,
    pub spent: f64,
    pub remaining: f64,
    pub entries: Vec<LedgerEntry>,
}

impl From<&BudgetLedger> for LedgerSnapshot {
    fn from(l: &BudgetLedger) -> Self {
        Self {
            total_budget: l.total_budget(),
            spent: l.spent(),
            remaining: l.remaining(),
            entries: l.entries().to_vec(),
        }
    }
}

/// Preferences response: the selection plus the profile it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencesResponse {
    pub profile: PreferenceProfile,
    pub selection: SelectionResult,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReleaseRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseResponse {
    pub version: VersionDescriptor,
    /// Seed actually used, server-generated when the request omitted it.
    pub seed: u64,
    pub utility: UtilityReport,
    pub impact: ImpactReport,
    pub ledger: LedgerSnapshot,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds_per_point: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Upload,
    Selection,
    Release,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEvent {
    pub event_kind: EventKind,
    pub payload: serde_json::Value,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryResponse {
    pub session_id: String,
    pub events: Vec<HistoryEvent>,
    pub ledger: LedgerSnapshot,
    pub versions: Vec<VersionDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoliciesResponse {
    pub policies: Vec<CompliancePolicy>,
}

/// Sweep responses are the analysis result as is.
pub type SweepResponse = SweepResult;

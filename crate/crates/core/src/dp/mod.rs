//! Laplace mechanism over dataset versions and the per-dataset budget ledger.

mod laplace;
mod ledger;

use thiserror::Error;

pub use laplace::{laplace_from_uniform, sample_laplace, LaplaceMechanism};
pub use ledger::{
    remaining_budget, BudgetLedger, LedgerEntry, BUDGET_SLACK, DEFAULT_TOTAL_BUDGET,
};

use crate::dataset::{DatasetError, Provenance, TimeSeriesDataset, VersionId, VersionStore};
use crate::mcda::{SAFE_MAX_EPSILON, SAFE_MIN_EPSILON};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("laplace scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("sample count must be at least 1")]
    InvalidCount,
    #[error("total budget must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("epsilon {0} is outside the safe range [0.1, 2.0]")]
    EpsilonOutsideSafeRange(f64),
    #[error("release of ε={requested} exceeds budget: {spent} of {total} already spent")]
    BudgetExceeded {
        requested: f64,
        spent: f64,
        total: f64,
    },
    #[error("version {0} already carries noise; releases must start from raw data")]
    NoisingNoisyData(VersionId),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// A computed but not yet stored release. Holding one does not spend
/// budget; [`commit_release`] does.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRelease {
    source: VersionId,
    payload: TimeSeriesDataset,
    provenance: Provenance,
}

impl PreparedRelease {
    pub fn source(&self) -> VersionId {
        self.source
    }

    pub fn payload(&self) -> &TimeSeriesDataset {
        &self.payload
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Validates the request and draws the noisy payload without touching the
/// store or the ledger.
pub fn prepare_release(
    store: &VersionStore,
    version_id: VersionId,
    epsilon: f64,
    delta_f: f64,
    ledger: &BudgetLedger,
    seed: u64,
) -> Result<PreparedRelease, DpError> {
    if !(SAFE_MIN_EPSILON..=SAFE_MAX_EPSILON).contains(&epsilon) {
        return Err(DpError::EpsilonOutsideSafeRange(epsilon));
    }
    let source = store.get(version_id)?;
    if !source.is_root() {
        return Err(DpError::NoisingNoisyData(version_id));
    }
    ledger.check(epsilon)?;
    let mechanism = LaplaceMechanism::for_release(delta_f, epsilon, seed)?;
    Ok(PreparedRelease {
        source: version_id,
        payload: mechanism.perturb(source.payload()),
        provenance: Provenance::laplace(epsilon, delta_f, seed),
    })
}

/// Stores a prepared release and charges its ε. On error neither the store
/// nor the ledger changes.
pub fn commit_release(
    store: &mut VersionStore,
    ledger: &mut BudgetLedger,
    prepared: PreparedRelease,
) -> Result<VersionId, DpError> {
    let epsilon = prepared.provenance.epsilon_used;
    ledger.check(epsilon)?;
    let child = store
        .fork(prepared.source, prepared.payload, prepared.provenance)?
        .version_id();
    ledger
        .charge(epsilon, child)
        .expect("budget was checked before forking");
    Ok(child)
}

/// Perturbs root version `version_id` with independent `Lap(Δf/ε)` noise per
/// cell, stores the result as a new child version and charges `epsilon` to
/// the ledger. On any error neither the store nor the ledger changes.
pub fn privatize(
    store: &mut VersionStore,
    version_id: VersionId,
    epsilon: f64,
    delta_f: f64,
    ledger: &mut BudgetLedger,
    seed: u64,
) -> Result<VersionId, DpError> {
    let prepared = prepare_release(store, version_id, epsilon, delta_f, ledger, seed)?;
    commit_release(store, ledger, prepared)
}

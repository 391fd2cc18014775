use serde::{Deserialize, Serialize};

use super::{DatasetError, TimeSeriesDataset};

pub type VersionId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Laplace,
}

/// How a derived version was produced from its parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub epsilon_used: f64,
    pub delta_f: f64,
    pub seed: u64,
    pub mechanism: Mechanism,
}

impl Provenance {
    pub fn laplace(epsilon_used: f64, delta_f: f64, seed: u64) -> Self {
        Self {
            epsilon_used,
            delta_f,
            seed,
            mechanism: Mechanism::Laplace,
        }
    }

    /// Laplace scale `Δf/ε`, which is also the expected absolute error per cell.
    pub fn scale(&self) -> f64 {
        self.delta_f / self.epsilon_used
    }
}

/// An immutable dataset snapshot. There are no `&mut` accessors; new states
/// are always new versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetVersion {
    version_id: VersionId,
    parent_id: Option<VersionId>,
    payload: TimeSeriesDataset,
    provenance: Option<Provenance>,
}

impl DatasetVersion {
    pub(crate) fn root(payload: TimeSeriesDataset) -> Self {
        Self {
            version_id: 0,
            parent_id: None,
            payload,
            provenance: None,
        }
    }

    pub fn version_id(&self) -> VersionId {
        self.version_id
    }

    pub fn parent_id(&self) -> Option<VersionId> {
        self.parent_id
    }

    pub fn payload(&self) -> &TimeSeriesDataset {
        &self.payload
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn is_root(&self) -> bool {
        self.provenance.is_none()
    }
}

/// Append-only store of the versions derived from one uploaded dataset.
/// Ids equal insertion order, so version 0 is always the clamped upload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionStore {
    versions: Vec<DatasetVersion>,
}

impl VersionStore {
    pub fn new(root: DatasetVersion) -> Self {
        debug_assert_eq!(root.version_id, 0);
        Self {
            versions: vec![root],
        }
    }

    pub fn root(&self) -> &DatasetVersion {
        &self.versions[0]
    }

    pub fn get(&self, id: VersionId) -> Result<&DatasetVersion, DatasetError> {
        usize::try_from(id)
            .ok()
            .and_then(|i| self.versions.get(i))
            .ok_or(DatasetError::UnknownVersion(id))
    }

    pub fn len(&self) -> usize {
        self.versions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.versions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DatasetVersion> {
        self.versions.iter()
    }

    /// Adds a child of `parent` carrying `noisy_payload`. The parent and all
    /// other versions are left untouched.
    pub fn fork(
        &mut self,
        parent: VersionId,
        noisy_payload: TimeSeriesDataset,
        provenance: Provenance,
    ) -> Result<&DatasetVersion, DatasetError> {
        let parent_shape = self.get(parent)?.payload.shape();
        if noisy_payload.shape() != parent_shape {
            return Err(DatasetError::ShapeMismatch {
                expected: parent_shape,
                found: noisy_payload.shape(),
            });
        }
        if !(provenance.epsilon_used.is_finite() && provenance.epsilon_used > 0.0) {
            return Err(DatasetError::InvalidProvenance(format!(
                "epsilon_used must be positive, got {}",
                provenance.epsilon_used
            )));
        }
        if !(provenance.delta_f.is_finite() && provenance.delta_f > 0.0) {
            return Err(DatasetError::InvalidProvenance(format!(
                "delta_f must be positive, got {}",
                provenance.delta_f
            )));
        }
        let version_id = self.versions.len() as VersionId;
        self.versions.push(DatasetVersion {
            version_id,
            parent_id: Some(parent),
            payload: noisy_payload,
            provenance: Some(provenance),
        });
        Ok(self.versions.last().expect("just pushed"))
    }

    /// Parent chain from `id` back to the root, inclusive on both ends.
    pub fn lineage(&self, id: VersionId) -> Result<Vec<VersionId>, DatasetError> {
        let mut chain = vec![id];
        let mut cur = self.get(id)?;
        while let Some(p) = cur.parent_id {
            chain.push(p);
            cur = self.get(p)?;
        }
        Ok(chain)
    }
}

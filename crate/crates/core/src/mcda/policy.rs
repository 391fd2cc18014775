use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{McdaError, SAFE_MAX_EPSILON, SAFE_MIN_EPSILON};

/// The policy file shipped with the crate (`strict`, `standard`, `open`).
pub const DEFAULT_POLICIES_TOML: &str = include_str!("../../assets/policies.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompliancePolicy {
    pub name: String,
    pub epsilon_cap: f64,
    #[serde(default)]
    pub description: String,
}

impl CompliancePolicy {
    pub fn new(
        name: impl Into<String>,
        epsilon_cap: f64,
        description: impl Into<String>,
    ) -> Result<Self, McdaError> {
        let p = Self::new_unchecked(name, epsilon_cap, description);
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn new_unchecked(
        name: impl Into<String>,
        epsilon_cap: f64,
        description: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            epsilon_cap,
            description: description.into(),
        }
    }

    pub fn validate(&self) -> Result<(), McdaError> {
        if self.name.trim().is_empty() {
            return Err(McdaError::InvalidPolicy("policy name is empty".into()));
        }
        if !(SAFE_MIN_EPSILON..=SAFE_MAX_EPSILON).contains(&self.epsilon_cap) {
            return Err(McdaError::InvalidPolicy(format!(
                "policy `{}` cap {} is outside [0.1, 2.0]",
                self.name, self.epsilon_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    #[serde(rename = "policy", default)]
    policies: Vec<CompliancePolicy>,
}

impl PolicySet {
    pub fn from_toml(text: &str) -> Result<Self, McdaError> {
        let set: Self =
            toml::from_str(text).map_err(|e| McdaError::InvalidPolicy(e.to_string()))?;
        let mut names = std::collections::HashSet::new();
        for p in &set.policies {
            p.validate()?;
            if !names.insert(p.name.as_str()) {
                return Err(McdaError::InvalidPolicy(format!(
                    "duplicate policy `{}`",
                    p.name
                )));
            }
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self, McdaError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            McdaError::InvalidPolicy(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    pub fn get(&self, name: &str) -> Result<&CompliancePolicy, McdaError> {
        self.policies
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| McdaError::UnknownPolicy(name.to_string()))
    }

    pub fn policies(&self) -> &[CompliancePolicy] {
        &self.policies
    }
}

impl Default for PolicySet {
    fn default() -> Self {
        Self::from_toml(DEFAULT_POLICIES_TOML).expect("bundled policy file is valid")
    }
}

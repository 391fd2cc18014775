use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;
use thiserror::Error;

use pdp_core::dp::DEFAULT_TOTAL_BUDGET;
use pdp_core::explain::{LlmConfig, LlmProvider, ProviderKind, ReportGenerator};
use pdp_core::mcda::{McdaError, PolicySet};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid policy file: {0}")]
    Policy(#[from] McdaError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Server settings. Every field has a default, so an empty file is valid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub total_budget: f64,
    /// Policy TOML; the bundled `strict`/`standard`/`open` set when unset.
    pub policy_file: Option<PathBuf>,
    pub provider: ProviderKind,
    /// External LLM settings; `PDP_LLM_*` environment variables fill this
    /// when the file leaves it out.
    pub llm: Option<LlmConfig>,
    pub fallback_enabled: bool,
    pub allow_raw_export: bool,
    /// Sessions are written here on shutdown and lazily reloaded on start.
    pub snapshot_path: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            total_budget: DEFAULT_TOTAL_BUDGET,
            policy_file: None,
            provider: ProviderKind::Template,
            llm: None,
            fallback_enabled: true,
            allow_raw_export: false,
            snapshot_path: None,
        }
    }
}

impl ServerConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.total_budget.is_finite() && self.total_budget > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "total_budget must be positive, got {}",
                self.total_budget
            )));
        }
        Ok(())
    }

    pub fn policies(&self) -> Result<PolicySet, ConfigError> {
        Ok(match &self.policy_file {
            Some(path) => PolicySet::load(path)?,
            None => PolicySet::default(),
        })
    }

    pub fn report_generator(&self) -> ReportGenerator {
        ReportGenerator::new(
            self.llm.clone().map(LlmProvider::new),
            self.fallback_enabled,
        )
    }
}

/// Command-line flags; each also reads a `PDP_*` environment variable and
/// overrides the config file.
#[derive(Debug, Parser)]
#[command(name = "pdp-server", version, about = "Participatory differential-privacy HTTP service")]
pub struct ServerArgs {
    /// TOML config file.
    #[arg(long, env = "PDP_CONFIG")]
    pub config: Option<PathBuf>,
    /// Listen address, e.g. 127.0.0.1:8080.
    #[arg(long, env = "PDP_BIND")]
    pub bind: Option<SocketAddr>,
    /// Default total ε budget for new sessions.
    #[arg(long, env = "PDP_TOTAL_BUDGET")]
    pub total_budget: Option<f64>,
    #[arg(long, env = "PDP_POLICY_FILE")]
    pub policy_file: Option<PathBuf>,
    /// Explanation provider: template or external_llm.
    #[arg(long, env = "PDP_PROVIDER")]
    pub provider: Option<ProviderKind>,
    /// Fail releases instead of falling back to the template when the
    /// external provider is unavailable.
    #[arg(long, env = "PDP_NO_FALLBACK")]
    pub no_fallback: bool,
    /// Allow exporting the uploaded (non-private) dataset.
    #[arg(long, env = "PDP_ALLOW_RAW_EXPORT")]
    pub allow_raw_export: bool,
    #[arg(long, env = "PDP_SNAPSHOT")]
    pub snapshot: Option<PathBuf>,
}

impl ServerArgs {
    pub fn resolve(self) -> Result<ServerConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => ServerConfig::load(path)?,
            None => ServerConfig::default(),
        };
        if let Some(v) = self.bind {
            cfg.bind = v;
        }
        if let Some(v) = self.total_budget {
            cfg.total_budget = v;
        }
        if self.policy_file.is_some() {
            cfg.policy_file = self.policy_file;
        }
        if let Some(v) = self.provider {
            cfg.provider = v;
        }
        if self.no_fallback {
            cfg.fallback_enabled = false;
        }
        if self.allow_raw_export {
            cfg.allow_raw_export = true;
        }
        if self.snapshot.is_some() {
            cfg.snapshot_path = self.snapshot;
        }
        if cfg.llm.is_none() {
            cfg.llm = LlmConfig::from_env();
        }
        if cfg.provider == ProviderKind::ExternalLlm && cfg.llm.is_none() {
            tracing::warn!("external_llm provider selected but no endpoint configured");
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

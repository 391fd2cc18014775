use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;

use pdp_core::api::{ApiError, ErrorCode};
use pdp_core::explain::ReportGenerator;
use pdp_core::mcda::PolicySet;

use crate::config::{ConfigError, ServerConfig};
use crate::session::Session;

pub type SessionHandle = Arc<RwLock<Session>>;

#[derive(Debug, Default, Serialize, Deserialize)]
struct Snapshot {
    sessions: Vec<serde_json::Value>,
}

/// Shared server state. Sessions restored from a snapshot stay as JSON until
/// first touched.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: ServerConfig,
    policies: PolicySet,
    generator: ReportGenerator,
    live: Mutex<HashMap<String, SessionHandle>>,
    dormant: Mutex<HashMap<String, serde_json::Value>>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let policies = config.policies()?;
        let generator = config.report_generator();
        let dormant = match &config.snapshot_path {
            Some(path) if path.exists() => read_snapshot(path)?,
            _ => HashMap::new(),
        };
        Ok(Self {
            inner: Arc::new(Inner {
                config,
                policies,
                generator,
                live: Mutex::new(HashMap::new()),
                dormant: Mutex::new(dormant),
            }),
        })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.inner.config
    }

    pub fn policies(&self) -> &PolicySet {
        &self.inner.policies
    }

    pub fn generator(&self) -> &ReportGenerator {
        &self.inner.generator
    }

    pub fn insert(&self, session: Session) -> SessionHandle {
        let id = session.session_id().to_string();
        let handle = Arc::new(RwLock::new(session));
        self.inner
            .live
            .lock()
            .expect("session map poisoned")
            .insert(id, handle.clone());
        handle
    }

    pub fn get(&self, id: &str) -> Result<SessionHandle, ApiError> {
        let unknown = || ApiError::new(ErrorCode::UnknownSession, format!("no session `{id}`"));
        let mut live = self.inner.live.lock().expect("session map poisoned");
        if let Some(h) = live.get(id) {
            return Ok(h.clone());
        }
        let value = self
            .inner
            .dormant
            .lock()
            .expect("snapshot map poisoned")
            .remove(id)
            .ok_or_else(unknown)?;
        let session: Session = serde_json::from_value(value).map_err(|e| {
            ApiError::new(ErrorCode::Internal, format!("snapshot of `{id}` is unreadable: {e}"))
        })?;
        tracing::debug!(session = id, "restored session from snapshot");
        let handle = Arc::new(RwLock::new(session));
        live.insert(id.to_string(), handle.clone());
        Ok(handle)
    }

    pub fn session_count(&self) -> usize {
        self.inner.live.lock().expect("session map poisoned").len()
            + self.inner.dormant.lock().expect("snapshot map poisoned").len()
    }

    /// Writes every session (live and not yet restored) to `path`, waiting
    /// for in-flight requests on each live session to finish.
    pub async fn write_snapshot(&self, path: &Path) -> std::io::Result<usize> {
        let handles: Vec<SessionHandle> = self
            .inner
            .live
            .lock()
            .expect("session map poisoned")
            .values()
            .cloned()
            .collect();
        let mut sessions: Vec<serde_json::Value> = self
            .inner
            .dormant
            .lock()
            .expect("snapshot map poisoned")
            .values()
            .cloned()
            .collect();
        for h in handles {
            let s = h.read().await;
            sessions.push(serde_json::to_value(&*s).expect("sessions serialize"));
        }
        let count = sessions.len();
        let json = serde_json::to_vec(&Snapshot { sessions }).expect("snapshot serializes");
        let tmp = path.with_extension("tmp");
        tokio::fs::write(&tmp, json).await?;
        tokio::fs::rename(&tmp, path).await?;
        Ok(count)
    }
}

fn read_snapshot(path: &Path) -> Result<HashMap<String, serde_json::Value>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let snapshot: Snapshot = serde_json::from_str(&text)
        .map_err(|e| ConfigError::Invalid(format!("snapshot {}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for value in snapshot.sessions {
        let id = value
            .get("session_id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| ConfigError::Invalid("snapshot entry without session_id".into()))?
            .to_string();
        out.insert(id, value);
    }
    Ok(out)
}

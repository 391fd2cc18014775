//! Typed async client for the session API. The only configuration is the
//! server's base URL.

use reqwest::{Method, RequestBuilder, Response, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use pdp_core::api::{
    ApiError, CreateSessionRequest, ErrorCode, HistoryResponse, PoliciesResponse,
    PreferencesResponse, ReleaseRequest, ReleaseResponse, SessionInfo, SweepRequest,
    SweepResponse, VersionDescriptor,
};
use pdp_core::dataset::VersionId;
use pdp_core::mcda::PreferenceProfile;

#[derive(Debug, Error)]
pub enum ClientError {
    /// The server answered with an `ApiError` body.
    #[error("server returned {status}: {error}")]
    Api { status: StatusCode, error: ApiError },
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("unexpected response ({status}): {body}")]
    Unexpected { status: StatusCode, body: String },
    #[error("invalid base url `{0}`")]
    InvalidBaseUrl(String),
}

impl ClientError {
    /// The API error code, when the server produced one.
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            Self::Api { error, .. } => Some(error.code),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

/// Clamp bounds and ingest options for an upload.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UploadOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub fill_missing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    pub fn new(base_url: &str) -> Result<Self> {
        let base = base_url.trim_end_matches('/').to_string();
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(ClientError::InvalidBaseUrl(base_url.to_string()));
        }
        Ok(Self {
            http: reqwest::Client::new(),
            base,
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{path}", self.base))
    }

    async fn check(resp: Response) -> Result<Response> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let body = resp.text().await?;
        match serde_json::from_str::<ApiError>(&body) {
            Ok(error) => Err(ClientError::Api { status, error }),
            Err(_) => Err(ClientError::Unexpected { status, body }),
        }
    }

    async fn json<T: DeserializeOwned>(req: RequestBuilder) -> Result<T> {
        let resp = Self::check(req.send().await?).await?;
        let status = resp.status();
        let body = resp.bytes().await?;
        serde_json::from_slice(&body).map_err(|e| ClientError::Unexpected {
            status,
            body: format!("{e}: {}", String::from_utf8_lossy(&body)),
        })
    }

    pub async fn policies(&self) -> Result<PoliciesResponse> {
        Self::json(self.request(Method::GET, "/api/policies")).await
    }

    pub async fn create_session(&self, req: &CreateSessionRequest) -> Result<SessionInfo> {
        Self::json(self.request(Method::POST, "/api/sessions").json(req)).await
    }

    pub async fn upload_csv(
        &self,
        session: &str,
        csv: Vec<u8>,
        options: &UploadOptions,
    ) -> Result<VersionDescriptor> {
        let req = self
            .request(Method::POST, &format!("/api/sessions/{session}/dataset"))
            .query(options)
            .header(reqwest::header::CONTENT_TYPE, "text/csv")
            .body(csv);
        Self::json(req).await
    }

    pub async fn set_preferences(
        &self,
        session: &str,
        profile: &PreferenceProfile,
    ) -> Result<PreferencesResponse> {
        let req = self
            .request(Method::PUT, &format!("/api/sessions/{session}/preferences"))
            .json(profile);
        Self::json(req).await
    }

    pub async fn release(&self, session: &str, seed: Option<u64>) -> Result<ReleaseResponse> {
        let req = self
            .request(Method::POST, &format!("/api/sessions/{session}/release"))
            .json(&ReleaseRequest { seed });
        Self::json(req).await
    }

    pub async fn sweep(&self, session: &str, req: &SweepRequest) -> Result<SweepResponse> {
        let req = self
            .request(Method::POST, &format!("/api/sessions/{session}/sweep"))
            .json(req);
        Self::json(req).await
    }

    pub async fn history(&self, session: &str) -> Result<HistoryResponse> {
        Self::json(self.request(Method::GET, &format!("/api/sessions/{session}/history"))).await
    }

    /// CSV bytes of a version.
    pub async fn export(&self, session: &str, version: VersionId) -> Result<Vec<u8>> {
        let req = self.request(
            Method::GET,
            &format!("/api/sessions/{session}/versions/{version}/export"),
        );
        let resp = Self::check(req.send().await?).await?;
        Ok(resp.bytes().await?.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_url_validation() {
        assert!(Client::new("localhost:8080").is_err());
        let c = Client::new("http://127.0.0.1:8080/").unwrap();
        assert_eq!(c.base_url(), "http://127.0.0.1:8080");
    }

    #[test]
    fn upload_query_skips_unset_fields() {
        let q = serde_json::to_value(UploadOptions {
            upper: Some(10.0),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(q, serde_json::json!({"upper": 10.0}));
    }
}

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use pdp_core::api::{
    ApiError, CreateSessionRequest, ErrorCode, HistoryResponse, PoliciesResponse,
    PreferencesResponse, ReleaseRequest, ReleaseResponse, SessionInfo, SweepRequest,
    SweepResponse, VersionDescriptor,
};
use pdp_core::dataset::{ClampBounds, IngestOptions, VersionId, DEFAULT_LOWER, DEFAULT_UPPER};
use pdp_core::mcda::PreferenceProfile;

use crate::session::Session;
use crate::state::AppState;

/// Upload size cap; large enough for a year of 10-minute readings from a few
/// hundred households.
pub const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;

pub struct ServiceError(pub ApiError);

impl From<ApiError> for ServiceError {
    fn from(e: ApiError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.code.http_status())
            .unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0)).into_response()
    }
}

type Result<T> = std::result::Result<T, ServiceError>;

fn invalid(message: impl Into<String>) -> ServiceError {
    ServiceError(ApiError::new(ErrorCode::InvalidRequest, message))
}

/// Parses a JSON body; an empty body yields `T::default()` when allowed.
fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_required(body)
}

fn parse_required<T: DeserializeOwned>(body: &Bytes) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| invalid(format!("invalid JSON body: {e}")))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> std::result::Result<T, ApiError> + Send + 'static,
) -> Result<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError(ApiError::new(ErrorCode::Internal, e.to_string())))?
        .map_err(ServiceError)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/policies", get(list_policies))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/dataset", post(upload_dataset))
        .route("/api/sessions/{id}/preferences", put(set_preferences))
        .route("/api/sessions/{id}/release", post(execute_release))
        .route("/api/sessions/{id}/sweep", post(run_sweep))
        .route("/api/sessions/{id}/history", get(get_history))
        .route("/api/sessions/{id}/versions/{vid}/export", get(export_version))
        .fallback(|| async {
            ServiceError(ApiError::new(ErrorCode::InvalidRequest, "no such endpoint"))
        })
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

async fn list_policies(State(state): State<AppState>) -> Json<PoliciesResponse> {
    Json(PoliciesResponse {
        policies: state.policies().policies().to_vec(),
    })
}

async fn create_session(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionInfo>)> {
    let req: CreateSessionRequest = parse_body(&body)?;
    let policy = match &req.policy_name {
        Some(name) => Some(state.policies().get(name).map_err(ApiError::from)?.clone()),
        None => None,
    };
    let total_budget = req.total_budget.unwrap_or(state.config().total_budget);
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id.clone(), total_budget, policy.clone())?;
    state.insert(session);
    tracing::info!(session = %id, total_budget, "session created");
    Ok((
        StatusCode::CREATED,
        Json(SessionInfo {
            session_id: id,
            total_budget,
            policy,
        }),
    ))
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    lower: Option<f64>,
    upper: Option<f64>,
    #[serde(default)]
    fill_missing: bool,
    unit: Option<String>,
}

/// Accepts either a raw CSV body or multipart form data, in which case the
/// first part carrying a file (or named `file`) is used.
async fn read_upload(state: &AppState, req: Request) -> Result<Bytes> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !is_multipart {
        return Bytes::from_request(req, state)
            .await
            .map_err(|e| invalid(format!("cannot read body: {e}")));
    }
    let mut multipart = Multipart::from_request(req, state)
        .await
        .map_err(|e| invalid(format!("invalid multipart body: {e}")))?;
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| invalid(format!("invalid multipart body: {e}")))?
    {
        if field.file_name().is_some() || field.name() == Some("file") {
            return field
                .bytes()
                .await
                .map_err(|e| invalid(format!("cannot read upload: {e}")));
        }
    }
    Err(invalid("multipart body has no file part"))
}

async fn upload_dataset(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<UploadQuery>,
    req: Request,
) -> Result<(StatusCode, Json<VersionDescriptor>)> {
    let handle = state.get(&id)?;
    let raw = read_upload(&state, req).await?;
    let bounds = ClampBounds::new(
        q.lower.unwrap_or(DEFAULT_LOWER),
        q.upper.unwrap_or(DEFAULT_UPPER),
    )
    .map_err(ApiError::from)?;
    let mut options = IngestOptions {
        fill_missing: q.fill_missing,
        ..Default::default()
    };
    if let Some(unit) = q.unit {
        options.unit_label = unit;
    }
    let mut session = handle.write_owned().await;
    let descriptor = blocking(move || session.upload(&raw, bounds, &options)).await?;
    Ok((StatusCode::CREATED, Json(descriptor)))
}

async fn set_preferences(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<PreferencesResponse>> {
    let handle = state.get(&id)?;
    let profile: PreferenceProfile = parse_required(&body)?;
    let mut session = handle.write().await;
    Ok(Json(session.set_preferences(profile)?))
}

async fn execute_release(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ReleaseResponse>> {
    let handle = state.get(&id)?;
    let req: ReleaseRequest = parse_body(&body)?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let generator = state.generator().clone();
    let provider = state.config().provider;
    let mut session = handle.write_owned().await;
    let response = blocking(move || session.execute_release(seed, &generator, provider)).await?;
    tracing::info!(
        session = %id,
        epsilon = response.utility.epsilon,
        version = response.version.version_id,
        "release"
    );
    Ok(Json(response))
}

async fn run_sweep(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SweepResponse>> {
    let handle = state.get(&id)?;
    let req: SweepRequest = parse_body(&body)?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let plan = handle
        .read()
        .await
        .plan_sweep(req.grid, req.seeds_per_point, seed)?;
    // the simulation runs without holding the session lock
    let result = blocking(move || plan.run()).await?;
    handle.write().await.record_sweep(&result);
    Ok(Json(result))
}

async fn get_history(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<HistoryResponse>> {
    let handle = state.get(&id)?;
    let session = handle.read().await;
    Ok(Json(session.history_response()))
}

async fn export_version(
    State(state): State<AppState>,
    Path((id, vid)): Path<(String, VersionId)>,
) -> Result<Response> {
    let handle = state.get(&id)?;
    let csv = handle
        .read()
        .await
        .export(vid, state.config().allow_raw_export)?;
    let disposition = format!("attachment; filename=\"{id}-v{vid}.csv\"");
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("text/csv")),
            (
                header::CONTENT_DISPOSITION,
                HeaderValue::from_str(&disposition).expect("ascii header"),
            ),
        ],
        csv,
    )
        .into_response())
}

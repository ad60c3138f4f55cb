//! HTTP review service over a [`ReviewStore`].
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/proposals?status=&limit=&offset=` | page of proposals |
//! | GET | `/proposals/{id}` | one proposal |
//! | POST | `/proposals/{id}/decision` | `{action, texts?, note?}` |
//! | POST | `/datasets/finalize` | write the reviewed corpus |
//! | GET | `/stats` | counts by status |
//!
//! Errors come back as `{"error": "..."}` with 400, 401, 404 or 409.

use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use logicclip_forge::proposal::now_ms;
use logicclip_forge::{Decision, ForgeError, ProposalStatus};

use crate::error::CliError;
use crate::store::ReviewStore;

pub const TOKEN_HEADER: &str = "x-review-token";
const DEFAULT_PAGE: usize = 50;

pub struct AppState {
    store: Mutex<ReviewStore>,
    output: PathBuf,
    token: Option<String>,
}

impl AppState {
    /// `output` is where finalize writes the corpus; with `token` set every
    /// request must carry it in the `x-review-token` header.
    pub fn new(store: ReviewStore, output: PathBuf, token: Option<String>) -> Arc<Self> {
        Arc::new(AppState { store: Mutex::new(store), output, token })
    }

    fn store(&self) -> MutexGuard<'_, ReviewStore> {
        self.store.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}

pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::BAD_REQUEST, msg.into())
    }
}

impl From<CliError> for ApiError {
    fn from(e: CliError) -> Self {
        let status = match &e {
            CliError::NotFound(_) => StatusCode::NOT_FOUND,
            CliError::Forge(ForgeError::Conflict { .. }) => StatusCode::CONFLICT,
            CliError::Forge(ForgeError::Decision(_)) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({"error": self.1}))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/proposals", get(list_proposals))
        .route("/proposals/{id}", get(get_proposal))
        .route("/proposals/{id}/decision", post(decide))
        .route("/datasets/finalize", post(finalize))
        .route("/stats", get(stats))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

async fn require_token(State(state): State<Arc<AppState>>, request: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let given = request.headers().get(TOKEN_HEADER).and_then(|v| v.to_str().ok());
        if given != Some(token.as_str()) {
            return ApiError(StatusCode::UNAUTHORIZED, "missing or wrong review token".into()).into_response();
        }
    }
    next.run(request).await
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    status: Option<String>,
    limit: Option<usize>,
    offset: Option<usize>,
}

async fn list_proposals(State(state): State<Arc<AppState>>, query: Result<Query<ListQuery>, axum::extract::rejection::QueryRejection>) -> ApiResult {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let status = match q.status.as_deref() {
        None | Some("") | Some("all") => None,
        Some(s) => Some(s.parse::<ProposalStatus>().map_err(|e| ApiError::bad_request(e.to_string()))?),
    };
    let (offset, limit) = (q.offset.unwrap_or(0), q.limit.unwrap_or(DEFAULT_PAGE));
    let store = state.store();
    let (total, page) = store.list(status, offset, limit);
    Ok(Json(json!({"total": total, "offset": offset, "limit": limit, "proposals": page})).into_response())
}

async fn get_proposal(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let store = state.store();
    let p = store.get(&id).ok_or(CliError::NotFound(id))?;
    Ok(Json(p).into_response())
}

#[derive(Debug, Deserialize)]
struct DecisionBody {
    #[serde(flatten)]
    decision: Decision,
    #[serde(default)]
    note: Option<String>,
}

async fn decide(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let body: DecisionBody =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("bad decision body: {e}")))?;
    let mut store = state.store();
    let p = store.decide(&id, body.decision, body.note, now_ms())?;
    Ok(Json(p).into_response())
}

async fn finalize(State(state): State<Arc<AppState>>) -> ApiResult {
    let store = state.store();
    let summary = store.finalize(&state.output)?;
    Ok(Json(summary).into_response())
}

async fn stats(State(state): State<Arc<AppState>>) -> ApiResult {
    let stats = state.store().stats();
    Ok(Json(stats).into_response())
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

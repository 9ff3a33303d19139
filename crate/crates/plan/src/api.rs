//! HTTP routes over the scenario store and the run registry.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/scenarios` | list ids, titles and ETags |
//! | POST | `/scenarios` | create from a scenario document |
//! | GET | `/scenarios/{id}` | canonical document, `ETag` header |
//! | PUT | `/scenarios/{id}` | replace; honors `If-Match` |
//! | GET | `/scenarios/{id}/runs` | runs of the scenario |
//! | POST | `/scenarios/{id}/runs` | start a run, returns at once |
//! | GET | `/scenarios/{id}/path` | link and Fresnel profile of one AP/cell pair |
//! | GET | `/runs/{id}` | run record |
//! | GET | `/runs/{id}/result` | result; `?encoding=compact` packs coverage grids |

use std::path::PathBuf;
use std::sync::Arc;

use apgrid::propagation::{PathProfile, Propagator};
use apgrid::scheme::Violation;
use apgrid::{Cell, Link, ScenarioError};
use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{compact, RunOutput, RunRequest};
use crate::runs::{RunRegistry, RunStatus};
use crate::store::{ScenarioStore, StoreError};

/// Largest accepted request body.
pub const MAX_BODY_BYTES: usize = 64 << 20;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<ScenarioStore>,
    pub runs: Arc<RunRegistry>,
}

impl AppState {
    /// Scenarios under `data_dir/scenarios`, finished runs under
    /// `data_dir/runs`, at most `workers` concurrent runs.
    pub fn open(data_dir: impl Into<PathBuf>, workers: usize) -> Result<Self, StoreError> {
        let dir = data_dir.into();
        Ok(Self {
            store: Arc::new(ScenarioStore::open(dir.join("scenarios"))?),
            runs: Arc::new(RunRegistry::open(dir.join("runs"), workers)?),
        })
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/scenarios", get(list_scenarios).post(create_scenario))
        .route("/scenarios/{id}", get(get_scenario).put(put_scenario))
        .route("/scenarios/{id}/runs", get(list_runs).post(start_run))
        .route("/scenarios/{id}/path", get(inspect_path))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/result", get(get_result))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Conflict(String),
    BadRequest(String),
    Invalid(Vec<Violation>),
    Unprocessable(String),
    Internal(String),
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => ApiError::NotFound(e.to_string()),
            StoreError::Busy(_) | StoreError::Stale { .. } => ApiError::Conflict(e.to_string()),
            StoreError::Scenario(ScenarioError::SchemaViolation(v)) => ApiError::Invalid(v),
            StoreError::Scenario(s) => ApiError::BadRequest(s.to_string()),
            StoreError::Io(_) => ApiError::Internal(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": "not-found", "message": m })),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, json!({ "error": "conflict", "message": m })),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": "malformed", "message": m })),
            ApiError::Invalid(v) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": "schema-violation", "message": "scenario violates scheme invariants", "violations": v }),
            ),
            ApiError::Unprocessable(m) => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": "run-failed", "message": m }))
            }
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": "internal", "message": m })),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn etag_header(etag: &str) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{etag}\"")).expect("hex tag is a valid header")
}

#[derive(Serialize)]
struct ScenarioSummary {
    id: String,
    title: Option<String>,
    etag: String,
}

async fn list_scenarios(State(s): State<AppState>) -> Json<Vec<ScenarioSummary>> {
    Json(
        s.store
            .list()
            .into_iter()
            .map(|(id, st)| ScenarioSummary {
                title: st.file.annotations.get("title").and_then(|t| t.as_str()).map(str::to_owned),
                etag: st.etag,
                id,
            })
            .collect(),
    )
}

async fn create_scenario(State(s): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let (id, stored) = s.store.create(&body)?;
    let location = HeaderValue::from_str(&format!("/scenarios/{id}")).expect("id is url-safe");
    Ok((
        StatusCode::CREATED,
        [(header::LOCATION, location), (header::ETAG, etag_header(&stored.etag))],
        Json(json!({ "id": id, "etag": stored.etag })),
    )
        .into_response())
}

async fn get_scenario(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let stored = s.store.get(&id)?;
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::ETAG, etag_header(&stored.etag)),
        ],
        stored.text.to_string(),
    )
        .into_response())
}

async fn put_scenario(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let if_match = match headers.get(header::IF_MATCH) {
        Some(v) => Some(
            v.to_str().map_err(|_| ApiError::BadRequest("If-Match is not ASCII".into()))?.trim_matches('"').to_owned(),
        ),
        None => None,
    };
    let stored = s.store.update(&id, &body, if_match.as_deref()).await?;
    Ok(([(header::ETAG, etag_header(&stored.etag))], Json(json!({ "id": id, "etag": stored.etag }))).into_response())
}

async fn list_runs(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    s.store.get(&id)?;
    Ok(Json(s.runs.for_scenario(&id)).into_response())
}

async fn start_run(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let snapshot = s.store.get(&id)?;
    let request: RunRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("run request: {e}")))?;
    let record = s.runs.submit(&id, snapshot, request);
    let location = HeaderValue::from_str(&format!("/runs/{}", record.id)).expect("id is url-safe");
    Ok((StatusCode::ACCEPTED, [(header::LOCATION, location)], Json(record)).into_response())
}

async fn get_run(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let (record, _) = s.runs.get(&id).ok_or_else(|| ApiError::NotFound(format!("unknown run `{id}`")))?;
    Ok(Json(record).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultQuery {
    encoding: Option<String>,
}

async fn get_result(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ResultQuery>,
) -> ApiResult<Response> {
    let (record, result) = s.runs.get(&id).ok_or_else(|| ApiError::NotFound(format!("unknown run `{id}`")))?;
    let compact_grid = match q.encoding.as_deref() {
        None | Some("json") => false,
        Some("compact") => true,
        Some(other) => return Err(ApiError::BadRequest(format!("unknown encoding `{other}`"))),
    };
    match record.status {
        RunStatus::Queued | RunStatus::Running => Ok((StatusCode::ACCEPTED, Json(record)).into_response()),
        RunStatus::Failed => Err(ApiError::Unprocessable(record.error.unwrap_or_default())),
        RunStatus::Done => {
            let result = result.ok_or_else(|| ApiError::Internal("finished run has no result".into()))?;
            match (&*result, compact_grid) {
                (RunOutput::Coverage(c), true) => Ok(Json(compact(c)).into_response()),
                (_, true) => Err(ApiError::BadRequest("compact encoding applies to coverage results only".into())),
                (out, false) => Ok(Json(out).into_response()),
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathQuery {
    site: String,
    equipment: String,
    col: u32,
    row: u32,
}

#[derive(Serialize)]
struct PathReport {
    profile: PathProfile<f64>,
    /// Obstacle id and its multiplier on the per-cell absorption.
    obstacle_weights: Vec<(String, f64)>,
    /// `null` when the antenna does not cover the cell.
    link: Option<Link>,
}

async fn inspect_path(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PathQuery>,
) -> ApiResult<Response> {
    let stored = s.store.get(&id)?;
    let scheme = &stored.file.scheme;
    let site = scheme.site_index(&q.site).ok_or_else(|| ApiError::BadRequest(format!("unknown site `{}`", q.site)))?;
    let equipment = scheme
        .equipment_index(&q.equipment)
        .ok_or_else(|| ApiError::BadRequest(format!("unknown equipment `{}`", q.equipment)))?;
    let target = Cell::new(q.col, q.row);
    if !scheme.contains(target) {
        return Err(ApiError::BadRequest(format!("cell {target} is outside the grid")));
    }
    let prop = Propagator::new(scheme);
    let profile = prop.profile(scheme.sites[site].cell, target);
    let obstacle_weights =
        profile.obstacle_weights().into_iter().map(|(q, w)| (scheme.obstacles[q].id.clone(), w)).collect();
    let link = prop.link(site, equipment, target, 0.0, apgrid::scheme::DEFAULT_NOISE_DBM);
    Ok(Json(PathReport { profile, obstacle_weights, link }).into_response())
}

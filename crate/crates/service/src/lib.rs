//! Session-scoped JSON API over the blink analysis pipeline, consumed by the
//! review UI. All routes live under `/api/v1/`.
//!
//! Sessions are kept in memory. Mutations of one session are serialized by
//! its write lock; reads share a read lock and therefore see a consistent
//! state. Heavy work (loading, detection, summaries) runs on the blocking
//! pool.

mod error;
mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use blinkscope_core::blinks::BlinkState;
use blinkscope_core::series::ColumnSelection;
use blinkscope_core::summary::downsample_indices;
use blinkscope_core::{io, render_summary_svg, Eye};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use tower_http::cors::CorsLayer;
use tower_http::trace::TraceLayer;

pub use error::{ApiError, FieldError};
pub use session::{params_from_map, params_to_map, Session, Snapshot};

/// Upload limit; a 20 minute recording at 240 fps is about 10 MB of CSV.
pub const MAX_BODY_BYTES: usize = 256 * 1024 * 1024;
pub const DEFAULT_PAGE: usize = 100;
pub const MAX_PAGE: usize = 10_000;
pub const DEFAULT_SERIES_POINTS: usize = 2000;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Where `POST .../snapshot` writes session files.
    pub snapshot_dir: PathBuf,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            snapshot_dir: PathBuf::from("snapshots"),
        }
    }
}

type SessionRef = Arc<RwLock<Session>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, SessionRef>>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            sessions: Arc::default(),
            config: Arc::new(config),
        }
    }

    fn session(&self, id: &str) -> Result<SessionRef, ApiError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::session_not_found(id))
    }

    fn insert(&self, session: Session) -> Result<SessionRef, ApiError> {
        let mut sessions = self.sessions.write();
        if sessions.contains_key(&session.id) {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "session_exists",
                format!("session `{}` already exists", session.id),
            ));
        }
        let id = session.id.clone();
        let handle = Arc::new(RwLock::new(session));
        sessions.insert(id, handle.clone());
        Ok(handle)
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/columns", get(get_columns).put(put_columns))
        .route("/sessions/{id}/params", get(get_params).put(put_params))
        .route("/sessions/{id}/detect", post(run_detection))
        .route("/sessions/{id}/events", get(list_events))
        .route("/sessions/{id}/events/{event_id}", get(get_event).patch(patch_event))
        .route("/sessions/{id}/matches", get(list_matches))
        .route("/sessions/{id}/stats", get(get_stats))
        .route("/sessions/{id}/stats.csv", get(get_stats_csv))
        .route("/sessions/{id}/summary", get(get_summary))
        .route("/sessions/{id}/summary.svg", get(get_summary_svg))
        .route("/sessions/{id}/series", get(get_series))
        .route("/sessions/{id}/snapshot", post(write_snapshot))
        .route("/snapshots/{id}/restore", post(restore_snapshot));
    Router::new()
        .nest("/api/v1", api)
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(CorsLayer::permissive())
        .layer(TraceLayer::new_for_http())
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("review service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

#[derive(Serialize)]
struct SessionInfo {
    id: String,
    version: u64,
    fps: f64,
    frames: usize,
    duration_s: f64,
    columns: Vec<String>,
    selection: ColumnSelection,
    detected: bool,
    dirty: bool,
    events: Option<usize>,
    matches: Option<usize>,
    manual_edits: usize,
}

impl SessionInfo {
    fn of(s: &Session) -> Self {
        Self {
            id: s.id.clone(),
            version: s.version,
            fps: s.fps,
            frames: s.recording.left.len(),
            duration_s: s.recording.left.duration_secs(),
            columns: s.columns.clone(),
            selection: s.selection.clone(),
            detected: s.detection.is_some(),
            dirty: s.dirty,
            events: s.detection.as_ref().map(|d| d.events.len()),
            matches: s.detection.as_ref().map(|d| d.matches.len()),
            manual_edits: s.manual_edits(),
        }
    }
}

#[derive(Deserialize)]
struct CreateSession {
    csv: String,
    fps: f64,
    left_column: Option<String>,
    right_column: Option<String>,
}

async fn create_session(
    State(state): State<AppState>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionInfo>), ApiError> {
    let req = body(payload)?;
    let selection = match (req.left_column, req.right_column) {
        (Some(left_column), Some(right_column)) => Some(ColumnSelection { left_column, right_column }),
        (None, None) => None,
        _ => return Err(ApiError::bad_request("give both left_column and right_column, or neither")),
    };
    let id = uuid::Uuid::new_v4().to_string();
    let session = blocking(move || Session::load(id, req.csv, req.fps, selection)).await?;
    let info = SessionInfo::of(&session);
    state.insert(session)?;
    tracing::info!(session = %info.id, frames = info.frames, "session created");
    Ok((StatusCode::CREATED, Json(info)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionInfo>, ApiError> {
    let session = state.session(&id)?;
    let info = SessionInfo::of(&session.read());
    Ok(Json(info))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    state
        .sessions
        .write()
        .remove(&id)
        .map(|_| StatusCode::NO_CONTENT)
        .ok_or_else(|| ApiError::session_not_found(&id))
}

async fn get_columns(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    let s = session.read();
    Ok(Json(json!({
        "version": s.version,
        "columns": s.columns,
        "selection": s.selection,
        "auto_selection": s.auto_selection(),
    })))
}

async fn put_columns(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<ColumnSelection>, JsonRejection>,
) -> Result<Json<SessionInfo>, ApiError> {
    let selection = body(payload)?;
    let session = state.session(&id)?;
    blocking(move || {
        let mut s = session.write();
        s.select_columns(selection)?;
        Ok(Json(SessionInfo::of(&s)))
    })
    .await
}

async fn get_params(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    let s = session.read();
    Ok(Json(json!({ "version": s.version, "params": params_to_map(&s.params) })))
}

/// Replaces the parameters: keys that are not given take their defaults.
async fn put_params(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<Map<String, Value>>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let map = body(payload)?;
    let session = state.session(&id)?;
    let params = params_from_map(&map)?;
    let mut s = session.write();
    s.set_params(params);
    Ok(Json(json!({ "version": s.version, "params": params_to_map(&s.params) })))
}

async fn run_detection(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    blocking(move || {
        let mut s = session.write();
        let cleared = s.detect()?;
        let d = s.detection()?;
        let warning = (cleared > 0).then(|| {
            format!("re-running detection discarded {cleared} manual state correction(s)")
        });
        Ok(Json(json!({
            "version": s.version,
            "events": d.events.len(),
            "matches": d.matches.len(),
            "threshold_left": d.threshold_left,
            "threshold_right": d.threshold_right,
            "warning": warning,
        })))
    })
    .await
}

#[derive(Deserialize)]
struct Page {
    offset: Option<usize>,
    limit: Option<usize>,
    eye: Option<Eye>,
}

async fn list_events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(page): Query<Page>,
) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    let s = session.read();
    let d = s.detection()?;
    let offset = page.offset.unwrap_or(0);
    let limit = page.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
    let selected: Vec<_> = d.events.iter().filter(|e| page.eye.is_none_or(|eye| e.eye == eye)).collect();
    let rows: Vec<_> = selected.iter().skip(offset).take(limit).collect();
    Ok(Json(json!({
        "version": s.version,
        "total": selected.len(),
        "offset": offset,
        "limit": limit,
        "events": rows,
    })))
}

fn find_event(s: &Session, event_id: usize) -> Result<Value, ApiError> {
    let event = s
        .detection()?
        .events
        .iter()
        .find(|e| e.id == event_id)
        .ok_or_else(|| ApiError::from(blinkscope_core::Error::UnknownBlink(event_id)))?;
    let matched = s.detection()?.matches.iter().find(|m| m.contains(event_id));
    Ok(json!({ "version": s.version, "event": event, "match": matched }))
}

async fn get_event(
    State(state): State<AppState>,
    Path((id, event_id)): Path<(String, usize)>,
) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    let s = session.read();
    Ok(Json(find_event(&s, event_id)?))
}

#[derive(Deserialize)]
struct StatePatch {
    state: BlinkState,
    /// Version the client last saw; informational only (last write wins).
    base_version: Option<u64>,
}

async fn patch_event(
    State(state): State<AppState>,
    Path((id, event_id)): Path<(String, usize)>,
    payload: Result<Json<StatePatch>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let patch = body(payload)?;
    let session = state.session(&id)?;
    let mut s = session.write();
    let previous = s.version;
    s.set_state(event_id, patch.state)?;
    let mut response = find_event(&s, event_id)?;
    response["dirty"] = s.dirty.into();
    response["overwrote_newer"] = patch.base_version.is_some_and(|v| v < previous).into();
    Ok(Json(response))
}

async fn list_matches(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    let s = session.read();
    let d = s.detection()?;
    Ok(Json(json!({ "version": s.version, "matches": d.matches })))
}

/// Runs `f` on current statistics, recomputing them under the write lock
/// when the session is dirty.
async fn with_stats<T, F>(session: SessionRef, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(u64, &blinkscope_core::StatsReport) -> Result<T, ApiError> + Send + 'static,
{
    {
        let s = session.read();
        if let Some(report) = s.fresh_stats() {
            return f(s.version, report);
        }
    }
    blocking(move || {
        let mut s = session.write();
        let version = s.version;
        let report = s.stats()?;
        f(version, report)
    })
    .await
}

async fn get_stats(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    with_stats(session, |version, report| {
        Ok(Json(json!({ "version": version, "stats": io::stats_json(report) })))
    })
    .await
}

async fn get_stats_csv(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let bytes = with_stats(session, |_, report| Ok(io::export_stats_csv(report)?)).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv")], bytes).into_response())
}

async fn with_summary<T, F>(session: SessionRef, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(u64, &blinkscope_core::SummaryBundle) -> Result<T, ApiError> + Send + 'static,
{
    blocking(move || {
        {
            let s = session.read();
            if let Some(bundle) = s.cached_summary() {
                return f(s.version, bundle);
            }
        }
        let mut s = session.write();
        let version = s.version;
        let bundle = s.summary()?;
        f(version, bundle)
    })
    .await
}

async fn get_summary(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    with_summary(session, |version, bundle| {
        Ok(Json(json!({ "version": version, "summary": bundle })))
    })
    .await
}

async fn get_summary_svg(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let svg = with_summary(session, |_, bundle| Ok(render_summary_svg(bundle))).await?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

#[derive(Deserialize)]
struct SeriesQuery {
    eye: Eye,
    /// First frame, inclusive.
    start: Option<usize>,
    /// Last frame, exclusive.
    end: Option<usize>,
    points: Option<usize>,
}

/// A decimated EAR trace for charting; invalid samples are `null`.
async fn get_series(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SeriesQuery>,
) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    let s = session.read();
    let series = match q.eye {
        Eye::Left => &s.recording.left,
        Eye::Right => &s.recording.right,
    };
    let end = q.end.unwrap_or(series.len()).min(series.len());
    let start = q.start.unwrap_or(0).min(end);
    let points = q.points.unwrap_or(DEFAULT_SERIES_POINTS).clamp(2, MAX_PAGE);
    let frames: Vec<usize> = downsample_indices(end - start, points).into_iter().map(|i| start + i).collect();
    let ear: Vec<Option<f64>> = frames
        .iter()
        .map(|&i| series.is_valid(i).then(|| series.values()[i]))
        .collect();
    let t: Vec<f64> = frames.iter().map(|&i| i as f64 / series.fps()).collect();
    Ok(Json(json!({
        "version": s.version,
        "eye": q.eye,
        "fps": series.fps(),
        "frames": frames,
        "t": t,
        "ear": ear,
    })))
}

async fn write_snapshot(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    let dir = state.config.snapshot_dir.clone();
    blocking(move || {
        let snapshot = session.read().snapshot();
        let bytes = serde_json::to_vec(&snapshot).map_err(|e| ApiError::internal(e.to_string()))?;
        std::fs::create_dir_all(&dir).map_err(|e| ApiError::internal(e.to_string()))?;
        let path = dir.join(format!("{}.json", snapshot.id));
        io::write_atomic(&path, &bytes)?;
        Ok(Json(json!({ "version": snapshot.version, "path": path })))
    })
    .await
}

async fn restore_snapshot(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<(StatusCode, Json<SessionInfo>), ApiError> {
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
        return Err(ApiError::bad_request("malformed session id"));
    }
    let path = state.config.snapshot_dir.join(format!("{id}.json"));
    let session = blocking(move || {
        let bytes = std::fs::read(&path).map_err(|e| {
            ApiError::new(StatusCode::NOT_FOUND, "snapshot_not_found", format!("{}: {e}", path.display()))
        })?;
        let snapshot: Snapshot = serde_json::from_slice(&bytes)
            .map_err(|e| ApiError::bad_request(format!("corrupt snapshot: {e}")))?;
        if snapshot.id != id {
            return Err(ApiError::bad_request("snapshot belongs to another session"));
        }
        Session::restore(snapshot)
    })
    .await?;
    let info = SessionInfo::of(&session);
    state.insert(session)?;
    Ok((StatusCode::CREATED, Json(info)))
}

//! HTTP service: stateless queries and stateful automaton sessions.
//!
//! Sessions live in memory. Steps to one session are serialized by a
//! per-session lock; a retried step whose ordinal is not newer than the last
//! one returns the current state without stepping again.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fiqh_core::automaton::{export_log, Advice, Automaton, Entry, FsmMode, SessionState, SessionStatus};
use fiqh_core::space::{Element, Value};
use serde::Serialize;
use serde_json::{Map, Value as JsonValue};
use tokio::io::AsyncWriteExt;
use tokio::sync::{Mutex, RwLock};

use crate::catalog::Catalog;
use crate::{answer_query, session_report, FieldError, QueryResponse, SessionReport};

pub struct SessionRecord {
    pub session_id: String,
    pub automaton: Arc<Automaton>,
    pub state: SessionState,
    pub created: u64,
    pub updated: u64,
}

pub struct AppState {
    pub catalog: Catalog,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionRecord>>>>,
    clock: AtomicU64,
    log_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(catalog: Catalog, log_dir: Option<PathBuf>) -> Arc<Self> {
        Arc::new(Self { catalog, sessions: RwLock::default(), clock: AtomicU64::new(0), log_dir })
    }

    fn tick(&self) -> u64 {
        self.clock.fetch_add(1, Ordering::SeqCst) + 1
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Malformed(String),
    Invalid(Vec<FieldError>),
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    fields: &'a [FieldError],
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind, message, fields) = match &self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, "not-found", m.clone(), &[][..]),
            ApiError::Malformed(m) => (StatusCode::BAD_REQUEST, "malformed", m.clone(), &[][..]),
            ApiError::Invalid(f) => {
                let names: Vec<&str> = f.iter().map(|e| e.field.as_str()).collect();
                (StatusCode::UNPROCESSABLE_ENTITY, "validation", format!("invalid fields: {}", names.join(", ")), &f[..])
            }
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", m.clone(), &[][..]),
        };
        (status, Json(ErrorBody { error: kind, message, fields })).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// A JSON object body with only `allowed` keys.
fn object(body: &Bytes, allowed: &[&str]) -> ApiResult<Map<String, JsonValue>> {
    let value: JsonValue =
        serde_json::from_slice(body).map_err(|e| ApiError::Malformed(format!("body is not JSON: {e}")))?;
    let JsonValue::Object(map) = value else {
        return Err(ApiError::Malformed("body must be a JSON object".into()));
    };
    let unknown: Vec<FieldError> = map
        .keys()
        .filter(|k| !allowed.contains(&k.as_str()))
        .map(|k| FieldError::new(k.clone(), "unknown field"))
        .collect();
    if !unknown.is_empty() {
        return Err(ApiError::Invalid(unknown));
    }
    Ok(map)
}

fn string_field(map: &Map<String, JsonValue>, key: &str, required: bool, errors: &mut Vec<FieldError>) -> Option<String> {
    match map.get(key) {
        Some(JsonValue::String(s)) if !s.is_empty() => Some(s.clone()),
        Some(JsonValue::Null) | None if !required => None,
        None | Some(JsonValue::Null) => {
            errors.push(FieldError::new(key, "required"));
            None
        }
        Some(_) => {
            errors.push(FieldError::new(key, "must be a non-empty string"));
            None
        }
    }
}

#[derive(Serialize)]
struct SpaceSummary {
    id: String,
    label: Option<String>,
    question_count: u128,
    attributes: Vec<AttributeView>,
    rulebases: Vec<RuleBaseView>,
}

#[derive(Serialize)]
struct AttributeView {
    name: String,
    element: Element,
    label: Option<String>,
    values: Vec<Value>,
}

#[derive(Serialize)]
struct RuleBaseView {
    id: String,
    label: Option<String>,
    rules: usize,
    verdicts: Vec<fiqh_core::rulebase::VerdictDecl>,
}

fn space_summary(state: &AppState, id: &str) -> Option<SpaceSummary> {
    let space = state.catalog.space(id)?;
    Some(SpaceSummary {
        id: space.id().to_string(),
        label: space.label().map(str::to_string),
        question_count: space.question_count(),
        attributes: (0..space.attribute_count())
            .map(|i| {
                let a = space.attribute(i);
                AttributeView {
                    name: a.name.clone(),
                    element: space.element_of(i),
                    label: a.label.clone(),
                    values: a.values.clone(),
                }
            })
            .collect(),
        rulebases: state
            .catalog
            .rulebases_for(space.id())
            .map(|rb| RuleBaseView {
                id: rb.id().to_string(),
                label: rb.label().map(str::to_string),
                rules: rb.rules().len(),
                verdicts: rb.verdicts().to_vec(),
            })
            .collect(),
    })
}

async fn list_spaces(State(state): State<Arc<AppState>>) -> Json<Vec<SpaceSummary>> {
    Json(state.catalog.spaces.keys().filter_map(|id| space_summary(&state, id)).collect())
}

async fn get_space(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SpaceSummary>> {
    space_summary(&state, &id).map(Json).ok_or_else(|| ApiError::NotFound(format!("no space `{id}`")))
}

#[derive(Serialize)]
struct AutomatonView {
    #[serde(flatten)]
    automaton: Automaton,
    obligatory: Vec<String>,
    deterministic: bool,
}

fn automaton_view(a: &Automaton) -> AutomatonView {
    AutomatonView {
        automaton: a.clone(),
        obligatory: a.obligatory().map(|x| x.id.clone()).collect(),
        deterministic: a.check_deterministic(),
    }
}

async fn list_automata(State(state): State<Arc<AppState>>) -> Json<Vec<AutomatonView>> {
    Json(state.catalog.automata.values().map(|a| automaton_view(a)).collect())
}

async fn get_automaton(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<AutomatonView>> {
    let a = state.catalog.automaton(&id).ok_or_else(|| ApiError::NotFound(format!("no automaton `{id}`")))?;
    Ok(Json(automaton_view(a)))
}

async fn query(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<QueryResponse>> {
    let map = object(&body, &["space", "rulebase", "bindings"])?;
    let mut errors = Vec::new();
    let space_id = string_field(&map, "space", false, &mut errors);
    let rb_id = string_field(&map, "rulebase", false, &mut errors);
    let mut bindings = Vec::new();
    match map.get("bindings") {
        Some(JsonValue::Object(b)) => {
            for (attr, value) in b {
                match value {
                    JsonValue::String(v) => bindings.push((attr.clone(), v.clone())),
                    _ => errors.push(FieldError::new(format!("bindings.{attr}"), "must be a value id string")),
                }
            }
        }
        Some(_) => errors.push(FieldError::new("bindings", "must be an object of attribute to value id")),
        None => errors.push(FieldError::new("bindings", "required")),
    }
    if space_id.is_none() && rb_id.is_none() && !errors.iter().any(|e| e.field == "space") {
        errors.push(FieldError::new("space", "give a space, a rulebase or both"));
    }
    if !errors.is_empty() {
        return Err(ApiError::Invalid(errors));
    }
    let rb = match &rb_id {
        Some(id) => {
            state.catalog.rulebases.get(id).ok_or_else(|| ApiError::NotFound(format!("no rulebase `{id}`")))?.as_ref()
        }
        None => {
            let space = space_id.as_deref().unwrap_or_default();
            if state.catalog.space(space).is_none() {
                return Err(ApiError::NotFound(format!("no space `{space}`")));
            }
            state.catalog.default_rulebase(space).map_err(|ids| {
                ApiError::Invalid(vec![FieldError::new(
                    "rulebase",
                    format!("required: space `{space}` has rulebases [{}]", ids.join(", ")),
                )])
            })?
        }
    };
    if let Some(space) = &space_id {
        if state.catalog.space(space).is_none() {
            return Err(ApiError::NotFound(format!("no space `{space}`")));
        }
        if space != rb.space_id() {
            return Err(ApiError::Invalid(vec![FieldError::new(
                "space",
                format!("rulebase `{}` is written for space `{}`", rb.id(), rb.space_id()),
            )]));
        }
    }
    let space = state
        .catalog
        .space(rb.space_id())
        .ok_or_else(|| ApiError::Internal(format!("space `{}` not loaded", rb.space_id())))?;
    answer_query(space, rb, &bindings).map(Json).map_err(ApiError::Invalid)
}

#[derive(Serialize)]
struct Progress {
    id: String,
    label: String,
    credited: bool,
}

/// Session state after creation or a step.
#[derive(Serialize)]
pub struct SessionView {
    session_id: String,
    automaton: String,
    mode: FsmMode,
    status: SessionStatus,
    advice: Option<Advice>,
    progress: Vec<Progress>,
    enabled: Vec<String>,
    performed: Vec<Entry>,
    step_count: usize,
    created: u64,
    updated: u64,
    /// False when a stale ordinal was retried and nothing changed.
    applied: bool,
}

fn session_view(rec: &SessionRecord, applied: bool) -> SessionView {
    let a = &rec.automaton;
    SessionView {
        session_id: rec.session_id.clone(),
        automaton: a.id.clone(),
        mode: a.mode,
        status: rec.state.status,
        advice: rec.state.advice.clone(),
        progress: a
            .obligatory()
            .zip(&rec.state.credited)
            .map(|(x, c)| Progress { id: x.id.clone(), label: x.label.clone(), credited: *c })
            .collect(),
        enabled: a.enabled(&rec.state.credited).iter().map(|x| x.id.clone()).collect(),
        performed: rec.state.performed.clone(),
        step_count: rec.state.step_count(),
        created: rec.created,
        updated: rec.updated,
        applied,
    }
}

async fn append_log(state: &AppState, id: &str, line: &str) -> ApiResult<()> {
    let Some(dir) = &state.log_dir else {
        return Ok(());
    };
    let path = dir.join(format!("{id}.log"));
    let write = async {
        let mut f = tokio::fs::OpenOptions::new().create(true).append(true).open(&path).await?;
        f.write_all(line.as_bytes()).await?;
        f.flush().await
    };
    write.await.map_err(|e| ApiError::Internal(format!("cannot write {}: {e}", path.display())))
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let map = object(&body, &["automaton"])?;
    let mut errors = Vec::new();
    let name = string_field(&map, "automaton", true, &mut errors);
    let Some(name) = name else {
        return Err(ApiError::Invalid(errors));
    };
    let automaton =
        state.catalog.automaton(&name).cloned().ok_or_else(|| ApiError::NotFound(format!("no automaton `{name}`")))?;
    let session_id = uuid::Uuid::new_v4().simple().to_string();
    let now = state.tick();
    let rec = SessionRecord {
        session_id: session_id.clone(),
        state: automaton.init_session(),
        automaton,
        created: now,
        updated: now,
    };
    append_log(&state, &session_id, &format!("# automaton {}\n", rec.automaton.id)).await?;
    let view = session_view(&rec, true);
    state.sessions.write().await.insert(session_id.clone(), Arc::new(Mutex::new(rec)));
    tracing::info!(session = %session_id, automaton = %view.automaton, "session created");
    Ok((StatusCode::CREATED, Json(view)))
}

async fn session(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<SessionRecord>>> {
    state.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::NotFound(format!("no session `{id}`")))
}

async fn post_event(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SessionView>> {
    let map = object(&body, &["event", "ordinal"])?;
    let mut errors = Vec::new();
    let event = string_field(&map, "event", true, &mut errors);
    let ordinal = match map.get("ordinal") {
        None | Some(JsonValue::Null) => None,
        Some(v) => match v.as_u64() {
            Some(n) if n > 0 => Some(n),
            _ => {
                errors.push(FieldError::new("ordinal", "must be a positive integer"));
                None
            }
        },
    };
    let cell = session(&state, &id).await?;
    let Some(event) = event else {
        return Err(ApiError::Invalid(errors));
    };
    if !errors.is_empty() {
        return Err(ApiError::Invalid(errors));
    }
    let mut rec = cell.lock().await;
    if let (Some(n), Some(last)) = (ordinal, rec.state.last_ordinal()) {
        if n <= last {
            return Ok(Json(session_view(&rec, false)));
        }
    }
    let a = Arc::clone(&rec.automaton);
    let next = match ordinal {
        Some(n) => a.step_at(&rec.state, &event, n),
        None => a.step(&rec.state, &event),
    }
    .map_err(|e| ApiError::Invalid(vec![FieldError::new("event", e.to_string())]))?;
    let entry = next.performed.last().expect("a step appends an entry");
    append_log(&state, &id, &format!("{} {} {}\n", entry.seq, entry.ordinal, entry.event)).await?;
    rec.state = next;
    rec.updated = state.tick();
    Ok(Json(session_view(&rec, true)))
}

#[derive(Serialize)]
struct SessionVerdictView {
    session_id: String,
    #[serde(flatten)]
    report: SessionReport,
    created: u64,
    updated: u64,
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionVerdictView>> {
    let cell = session(&state, &id).await?;
    let rec = cell.lock().await;
    Ok(Json(SessionVerdictView {
        session_id: rec.session_id.clone(),
        report: session_report(&rec.automaton, &rec.state),
        created: rec.created,
        updated: rec.updated,
    }))
}

async fn get_log(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let cell = session(&state, &id).await?;
    let log = export_log(&cell.lock().await.state);
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], log))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/spaces", get(list_spaces))
        .route("/spaces/{id}", get(get_space))
        .route("/automata", get(list_automata))
        .route("/automata/{id}", get(get_automaton))
        .route("/query", post(query))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/log", get(get_log))
        .with_state(state)
}

pub async fn serve(catalog: Catalog, bind: &str, log_dir: Option<PathBuf>) -> anyhow::Result<()> {
    if let Some(dir) = &log_dir {
        std::fs::create_dir_all(dir)?;
    }
    let app = router(AppState::new(catalog, log_dir));
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

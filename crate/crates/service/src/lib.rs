//! HTTP session service: each session holds a workspace that clients
//! upload tables into, apply or preview operations against, run pipelines
//! in, and read provenance from.

pub mod cli;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex as SyncMutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as JsonValue};
use tabletide::diagnostic::Diagnostic;
use tabletide::dsl::{self, Severity};
use tabletide::io::{self, CsvOptions};
use tabletide::table::{Field, Table};
use tabletide::workspace::FileAccess;
use tabletide::{OpError, Operation, Workspace};
use tokio::sync::Mutex;

pub const DEFAULT_PORT: u16 = 7341;

#[derive(Debug, Clone)]
pub struct Config {
    pub body_limit: usize,
    pub table_limit: usize,
    pub idle_timeout: Duration,
    /// Pipelines may `load` and `export` relative paths under this
    /// directory; without it they cannot touch files.
    pub data_dir: Option<PathBuf>,
    pub allow_fetch: bool,
    pub static_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            body_limit: 64 * 1024 * 1024,
            table_limit: 256,
            idle_timeout: Duration::from_secs(3600),
            data_dir: None,
            allow_fetch: false,
            static_dir: None,
        }
    }
}

struct Session {
    ws: Workspace,
    created: SystemTime,
    last_used: Instant,
}

type SessionRef = Arc<Mutex<Session>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<SyncMutex<HashMap<String, SessionRef>>>,
    config: Arc<Config>,
}

impl AppState {
    pub fn new(config: Config) -> Self {
        AppState {
            sessions: Arc::default(),
            config: Arc::new(config),
        }
    }

    fn workspace(&self) -> Workspace {
        let files = match &self.config.data_dir {
            Some(d) => FileAccess::Confined(d.clone()),
            None => FileAccess::Denied,
        };
        Workspace::new(files)
            .with_network(self.config.allow_fetch)
            .with_table_limit(self.config.table_limit)
    }

    /// Drops sessions idle for longer than the timeout; returns how many.
    pub fn sweep(&self) -> usize {
        let ttl = self.config.idle_timeout;
        let mut sessions = self.sessions.lock().expect("session map lock");
        let before = sessions.len();
        sessions.retain(|_, s| match s.try_lock() {
            Ok(s) => s.last_used.elapsed() <= ttl,
            Err(_) => true,
        });
        before - sessions.len()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map lock").len()
    }

    fn session(&self, id: &str) -> Result<SessionRef, ApiError> {
        self.sweep();
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`")))
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.config.body_limit;
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/health", get(health))
        .route("/session", post(create_session))
        .route("/session/{id}", get(session_info).delete(drop_session))
        .route("/session/{id}/tables", get(list_tables))
        .route("/session/{id}/table/{handle}", get(get_table))
        .route("/session/{id}/op", post(apply_op))
        .route("/session/{id}/preview", post(preview_op))
        .route("/session/{id}/provenance", get(provenance))
        .route("/session/{id}/diagnostics", get(diagnostics))
        .route("/session/{id}/pipeline", post(run_pipeline))
        .route("/session/{id}/upload", post(upload))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the listener fails, sweeping idle sessions once a minute.
pub async fn serve(listener: tokio::net::TcpListener, config: Config) -> std::io::Result<()> {
    let state = AppState::new(config);
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.sweep();
        }
    });
    axum::serve(listener, router(state)).await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: JsonValue,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": { "kind": kind, "message": message.into() } }),
        }
    }

    fn with(mut self, key: &str, value: JsonValue) -> Self {
        self.body["error"][key] = value;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<OpError> for ApiError {
    fn from(e: OpError) -> Self {
        let (status, kind) = match &e {
            OpError::HandleTaken(_) => (StatusCode::CONFLICT, "handle_taken"),
            OpError::PathDenied(_) => (StatusCode::FORBIDDEN, "path_denied"),
            OpError::UnknownHandle(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_handle"),
            OpError::TableLimit(_) => (StatusCode::UNPROCESSABLE_ENTITY, "table_limit"),
            OpError::InputCount { .. } | OpError::OutputCount { .. } | OpError::DuplicateOutput(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "arity")
            }
            OpError::Io(_) => (StatusCode::UNPROCESSABLE_ENTITY, "io"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "operation_failed"),
        };
        ApiError::new(status, kind, e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Serialize)]
struct TableSummary {
    handle: String,
    rows: usize,
    schema: Vec<Field>,
    node: Option<usize>,
}

fn summary(ws: &Workspace, handle: &str) -> Option<TableSummary> {
    let t = ws.table(handle)?;
    Some(TableSummary {
        handle: handle.to_string(),
        rows: t.row_count(),
        schema: t.schema(),
        node: ws.node_of(handle),
    })
}

fn rows_json(t: &Table, offset: usize, limit: usize) -> Vec<Vec<JsonValue>> {
    (offset..t.row_count().min(offset.saturating_add(limit)))
        .map(|i| t.row(i).iter().map(io::cell_to_json).collect())
        .collect()
}

async fn health() -> Json<JsonValue> {
    Json(json!({ "status": "ok" }))
}

async fn create_session(State(state): State<AppState>) -> (StatusCode, Json<JsonValue>) {
    state.sweep();
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session {
        ws: state.workspace(),
        created: SystemTime::now(),
        last_used: Instant::now(),
    };
    state
        .sessions
        .lock()
        .expect("session map lock")
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    (StatusCode::CREATED, Json(json!({ "id": id })))
}

async fn session_info(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<JsonValue> {
    let s = state.session(&id)?;
    let mut s = s.lock().await;
    s.last_used = Instant::now();
    let created = s.created.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    Ok(Json(json!({
        "id": id,
        "created": created,
        "tables": s.ws.len(),
        "edges": s.ws.graph().edges().len(),
    })))
}

async fn drop_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    state.session(&id)?;
    state.sessions.lock().expect("session map lock").remove(&id);
    Ok(StatusCode::NO_CONTENT)
}

async fn list_tables(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<TableSummary>> {
    let s = state.session(&id)?;
    let mut s = s.lock().await;
    s.last_used = Instant::now();
    Ok(Json(s.ws.handles().into_iter().filter_map(|h| summary(&s.ws, h)).collect()))
}

#[derive(Deserialize)]
struct PageQuery {
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

const DEFAULT_PAGE: usize = 100;

async fn get_table(
    State(state): State<AppState>,
    Path((id, handle)): Path<(String, String)>,
    Query(q): Query<PageQuery>,
) -> ApiResult<JsonValue> {
    let s = state.session(&id)?;
    let mut s = s.lock().await;
    s.last_used = Instant::now();
    let t = s
        .ws
        .table(&handle)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_handle", format!("no table `{handle}`")))?;
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    Ok(Json(json!({
        "handle": handle,
        "schema": t.schema(),
        "offset": q.offset,
        "total": t.row_count(),
        "attribution": t.attribution(),
        "rows": rows_json(t, q.offset, limit),
    })))
}

/// An operation plus the handles it reads and binds, e.g.
/// `{"op": "subset", "predicate": "v > 1", "inputs": ["t"], "outputs": ["a", "b"]}`.
#[derive(Debug, Deserialize)]
pub struct OpRequest {
    #[serde(flatten)]
    pub op: Operation,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

fn parse_request(body: &Bytes) -> Result<OpRequest, ApiError> {
    let req: OpRequest = serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", e.to_string()))?;
    req.op
        .check_arity(req.inputs.len(), req.outputs.len())
        .or_else(|e| match req.op {
            Operation::Decompose { .. } if req.outputs.len() == 1 => Ok(()),
            _ => Err(e),
        })?;
    Ok(req)
}

#[derive(Serialize)]
struct ApplyResponse {
    outputs: Vec<TableSummary>,
    diagnostics: Vec<Diagnostic>,
    statement: String,
}

async fn apply_op(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<ApplyResponse> {
    let s = state.session(&id)?;
    let req = parse_request(&body)?;
    let mut s = s.lock_owned().await;
    s.last_used = Instant::now();
    let result = tokio::task::spawn_blocking(move || {
        let applied = s.ws.apply_fresh(&req.op, &req.inputs, &req.outputs)?;
        Ok::<_, OpError>(ApplyResponse {
            outputs: applied.handles.iter().filter_map(|h| summary(&s.ws, h)).collect(),
            diagnostics: applied.diagnostics,
            statement: dsl::statement_text(&req.outputs, &req.op, &req.inputs),
        })
    })
    .await
    .expect("apply task does not panic")?;
    Ok(Json(result))
}

#[derive(Deserialize)]
struct PreviewQuery {
    limit: Option<usize>,
}

const DEFAULT_PREVIEW: usize = 20;

async fn preview_op(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PreviewQuery>,
    body: Bytes,
) -> ApiResult<JsonValue> {
    let s = state.session(&id)?;
    let req = parse_request(&body)?;
    let limit = q.limit.unwrap_or(DEFAULT_PREVIEW);
    let mut s = s.lock_owned().await;
    s.last_used = Instant::now();
    let result = tokio::task::spawn_blocking(move || {
        let p = s.ws.preview(&req.op, &req.inputs, &req.outputs)?;
        let taken: Vec<&String> = p.tables.iter().map(|(h, _)| h).filter(|h| s.ws.table(h).is_some()).collect();
        let outputs: Vec<JsonValue> = p
            .tables
            .iter()
            .map(|(h, t)| {
                json!({
                    "handle": h,
                    "schema": t.schema(),
                    "total": t.row_count(),
                    "rows": rows_json(t, 0, limit),
                })
            })
            .collect();
        Ok::<_, OpError>(json!({
            "outputs": outputs,
            "diagnostics": p.diagnostics,
            "collisions": taken,
            "statement": dsl::statement_text(&req.outputs, &req.op, &req.inputs),
        }))
    })
    .await
    .expect("preview task does not panic")?;
    Ok(Json(result))
}

#[derive(Deserialize)]
struct ProvenanceQuery {
    format: Option<String>,
}

async fn provenance(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ProvenanceQuery>,
) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let mut s = s.lock().await;
    s.last_used = Instant::now();
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(s.ws.graph().to_document()).into_response()),
        Some("dot") => Ok((
            [(axum::http::header::CONTENT_TYPE, "text/vnd.graphviz")],
            s.ws.graph().to_dot(),
        )
            .into_response()),
        Some(other) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_request",
            format!("unknown format `{other}`; use json or dot"),
        )),
    }
}

async fn diagnostics(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<Diagnostic>> {
    let s = state.session(&id)?;
    let mut s = s.lock().await;
    s.last_used = Instant::now();
    Ok(Json(s.ws.diagnostics().to_vec()))
}

/// Accepts the script as plain text or as `{"source": "..."}`.
fn pipeline_source(body: &Bytes) -> Result<String, ApiError> {
    let text = std::str::from_utf8(body)
        .map_err(|_| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", "pipeline is not UTF-8"))?;
    if text.trim_start().starts_with('{') {
        if let Ok(JsonValue::Object(m)) = serde_json::from_str::<JsonValue>(text) {
            if let Some(JsonValue::String(s)) = m.get("source") {
                return Ok(s.clone());
            }
        }
    }
    Ok(text.to_string())
}

async fn run_pipeline(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let source = pipeline_source(&body)?;
    let pipeline = dsl::parse(&source).map_err(|e| {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "parse_error", e.message.clone())
            .with("line", json!(e.line))
            .with("column", json!(e.column))
            .with("token", json!(e.token))
    })?;
    let mut s = s.lock_owned().await;
    s.last_used = Instant::now();
    let prebound: Vec<String> = s.ws.handles().into_iter().map(str::to_string).collect();
    let refs: Vec<&str> = prebound.iter().map(String::as_str).collect();
    let issues = dsl::check_with(&pipeline, &refs);
    if issues.iter().any(|i| i.severity == Severity::Error) {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "check_failed", "pipeline has errors")
            .with("issues", json!(issues)));
    }
    tokio::task::spawn_blocking(move || match dsl::execute(&pipeline, &mut s.ws) {
        Ok(report) => Ok(Json(json!({
            "statements": report.statements,
            "issues": issues,
            "tables": s.ws.handles(),
        }))
        .into_response()),
        Err(e) => {
            let status = ApiError::from(e.error.clone()).status;
            Err(ApiError::new(status, "execution_failed", e.error.to_string())
                .with("statement", json!(e.statement))
            .with("line", json!(e.line))
            .with("column", json!(e.column))
                .with("completed", json!(e.completed.statements)))
        }
    })
    .await
    .expect("pipeline task does not panic")
}

async fn upload(State(state): State<AppState>, Path(id): Path<String>, mut form: Multipart) -> ApiResult<TableSummary> {
    let s = state.session(&id)?;
    let bad = |m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_upload", m);
    let mut handle: Option<String> = None;
    let mut file: Option<(String, Bytes)> = None;
    let mut options = CsvOptions::default();
    while let Some(field) = form.next_field().await.map_err(|e| bad(e.to_string()))? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "file" => {
                let filename = field.file_name().unwrap_or("upload.csv").to_string();
                let bytes = field.bytes().await.map_err(|e| bad(e.to_string()))?;
                file = Some((filename, bytes));
            }
            "handle" => handle = Some(field.text().await.map_err(|e| bad(e.to_string()))?),
            "delimiter" => {
                let d = field.text().await.map_err(|e| bad(e.to_string()))?;
                let mut chars = d.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => options.delimiter = c,
                    _ => return Err(bad("delimiter must be one character".into())),
                }
            }
            _ => {}
        }
    }
    let (filename, bytes) = file.ok_or_else(|| bad("missing `file` field".into()))?;
    let handle = match handle {
        Some(h) if !h.trim().is_empty() => h.trim().to_string(),
        _ => default_handle(&filename),
    };
    let text = std::str::from_utf8(&bytes).map_err(|_| bad("file is not UTF-8".into()))?;
    let table = io::parse_csv(text, &options).map_err(|e| bad(e.to_string()))?;
    let mut s = s.lock().await;
    s.last_used = Instant::now();
    if s.ws.table(&handle).is_some() {
        return Err(OpError::HandleTaken(handle).into());
    }
    let mut params = String::from("upload ");
    dsl::write_name(&mut params, &filename).expect("writing to a String cannot fail");
    params.push_str(" as ");
    dsl::write_name(&mut params, &handle).expect("writing to a String cannot fail");
    s.ws.bind(&handle, table.with_attribution(filename), &params)?;
    Ok(Json(summary(&s.ws, &handle).expect("just bound")))
}

/// `Water Usage (2016).csv` becomes `Water_Usage_2016`.
fn default_handle(filename: &str) -> String {
    let stem = std::path::Path::new(filename)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("upload");
    let mut out = String::new();
    for c in stem.chars() {
        if c.is_alphanumeric() {
            out.push(c);
        } else if !out.is_empty() && !out.ends_with('_') {
            out.push('_');
        }
    }
    let out = out.trim_end_matches('_').to_string();
    match out.chars().next() {
        None => "upload".into(),
        Some(c) if c.is_ascii_digit() => format!("t_{out}"),
        Some(_) => out,
    }
}

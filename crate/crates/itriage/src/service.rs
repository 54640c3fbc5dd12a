//! HTTP front end over the session engine.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use itriage_core::fmea::{self, FaultRecord, FmeaError, RecordStore, Weights, FAULTLOG_FILE};
use itriage_core::potential::{sample_grid, AxisPair, PotentialParams};
use itriage_core::session::{
    append_events, read_events, replay, Clock, Input, Session, SessionError, SystemClock, LOG_EXTENSION,
};
use itriage_core::KnowledgeBase;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;

use crate::view::{project, ApiSessionView};

const MAX_GRID_CELLS: usize = 1_000_000;

pub struct AppState {
    kb: Arc<KnowledgeBase>,
    clock: Arc<dyn Clock>,
    data_dir: Option<PathBuf>,
    weights: Weights,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    faultlog: Mutex<RecordStore>,
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    FaultLog(#[from] FmeaError),
}

impl AppState {
    /// Builds the state and, when `data_dir` is set, recovers every session
    /// log and the fault log found there.
    pub fn new(kb: KnowledgeBase, clock: Arc<dyn Clock>, data_dir: Option<PathBuf>) -> Result<Self, StartupError> {
        let kb = Arc::new(kb);
        let mut sessions = HashMap::new();
        let mut faultlog = RecordStore::new();
        if let Some(dir) = &data_dir {
            std::fs::create_dir_all(dir).map_err(|source| StartupError::Io { path: dir.clone(), source })?;
            for (id, s) in recover(&kb, dir, &clock)? {
                sessions.insert(id, Arc::new(Mutex::new(s)));
            }
            faultlog = RecordStore::open(dir.join(FAULTLOG_FILE))?;
        }
        Ok(AppState {
            kb,
            clock,
            data_dir,
            weights: Weights::default(),
            sessions: RwLock::new(sessions),
            faultlog: Mutex::new(faultlog),
        })
    }

    pub fn kb(&self) -> &Arc<KnowledgeBase> {
        &self.kb
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session `{id}`")))
    }

    fn persist(&self, s: &Session, from: usize) -> Result<(), ApiError> {
        let Some(dir) = &self.data_dir else { return Ok(()) };
        let path = log_path(dir, s.id());
        append_events(&path, &s.events()[from..]).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))
    }

    fn view(&self, s: &Session) -> ApiSessionView {
        project(s, &self.weights)
    }
}

fn log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.{LOG_EXTENSION}"))
}

fn recover(kb: &Arc<KnowledgeBase>, dir: &Path, clock: &Arc<dyn Clock>) -> Result<Vec<(String, Session)>, StartupError> {
    let io = |source| StartupError::Io { path: dir.to_path_buf(), source };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(LOG_EXTENSION) {
            continue;
        }
        let events = match read_events(&path) {
            Ok(ev) => ev,
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", path.display());
                continue;
            }
        };
        match replay(kb.clone(), &events) {
            Ok(mut s) => {
                s.set_clock(clock.clone());
                out.push((s.id().to_string(), s));
            }
            Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message.to_string())
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }

    fn busy() -> Self {
        Self::new(StatusCode::CONFLICT, "session is busy with another request")
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::UnknownTree(_) => StatusCode::NOT_FOUND,
            SessionError::InvalidAnswer { .. } | SessionError::AnswerRequired | SessionError::AcknowledgeRequired => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            SessionError::NotActive(_) | SessionError::DeadEnd { .. } | SessionError::MaxStepsExceeded(_) => {
                StatusCode::CONFLICT
            }
            SessionError::NoStart(_) | SessionError::Unresolved { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/kb/trees", get(list_trees))
        .route("/kb/trees/{id}", get(get_tree))
        .route("/kb/failure-modes", get(failure_modes))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(abort_session))
        .route("/sessions/{id}/advance", post(advance_session))
        .route("/reports/fmea", get(fmea_report))
        .route("/faultlog", post(post_faultlog))
        .route("/potential/grid", get(potential_grid))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub fn system_clock() -> Arc<dyn Clock> {
    Arc::new(SystemClock)
}

#[derive(Serialize)]
struct TreeSummary<'a> {
    id: &'a str,
    title: &'a str,
    entry: bool,
    nodes: usize,
}

async fn list_trees(State(st): Shared) -> Json<serde_json::Value> {
    let trees: Vec<TreeSummary> = st
        .kb
        .trees()
        .iter()
        .map(|t| TreeSummary { id: &t.id, title: &t.title, entry: t.entry, nodes: t.nodes().len() })
        .collect();
    Json(json!(trees))
}

async fn get_tree(State(st): Shared, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let tree = st.kb.tree(&id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no tree `{id}`")))?;
    Ok(Json(tree).into_response())
}

async fn failure_modes(State(st): Shared) -> Response {
    Json(st.kb.catalog()).into_response()
}

#[derive(Deserialize)]
struct CreateSession {
    tree: String,
}

async fn create_session(State(st): Shared, Json(req): Json<CreateSession>) -> Result<Response, ApiError> {
    let s = Session::start(st.kb.clone(), &req.tree, st.clock.clone())?;
    st.persist(&s, 0)?;
    let view = st.view(&s);
    st.sessions.write().unwrap().insert(s.id().to_string(), Arc::new(Mutex::new(s)));
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(st): Shared, UrlPath(id): UrlPath<String>) -> Result<Json<ApiSessionView>, ApiError> {
    let handle = st.session(&id)?;
    let s = handle.lock().await;
    Ok(Json(st.view(&s)))
}

#[derive(Deserialize)]
struct AdvanceRequest {
    answer: Option<String>,
    #[serde(default)]
    acknowledge: bool,
}

async fn advance_session(
    State(st): Shared,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<AdvanceRequest>,
) -> Result<Json<ApiSessionView>, ApiError> {
    let input = match (req.answer, req.acknowledge) {
        (Some(a), false) => Input::Answer(a),
        (None, true) => Input::Acknowledge,
        _ => return Err(ApiError::bad_request("send exactly one of `answer` or `acknowledge: true`")),
    };
    let handle = st.session(&id)?;
    let mut s = handle.try_lock().map_err(|_| ApiError::busy())?;
    let before = s.events().len();
    let result = s.advance(input);
    st.persist(&s, before)?;
    result?;
    Ok(Json(st.view(&s)))
}

async fn abort_session(State(st): Shared, UrlPath(id): UrlPath<String>) -> Result<Json<ApiSessionView>, ApiError> {
    let handle = st.session(&id)?;
    let mut s = handle.try_lock().map_err(|_| ApiError::busy())?;
    let before = s.events().len();
    s.abort()?;
    st.persist(&s, before)?;
    Ok(Json(st.view(&s)))
}

#[derive(Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

async fn fmea_report(State(st): Shared, Query(q): Query<ReportQuery>) -> Result<Response, ApiError> {
    let store = st.faultlog.lock().await;
    let rows = fmea::report(&st.kb, &store);
    match q.format.as_deref().unwrap_or("json") {
        "json" => Ok(Json(rows).into_response()),
        "csv" => Ok(([(header::CONTENT_TYPE, "text/csv")], fmea::render_csv(&rows)).into_response()),
        "text" => Ok(([(header::CONTENT_TYPE, "text/plain")], fmea::render_text(&rows)).into_response()),
        other => Err(ApiError::bad_request(format!("unknown format `{other}`"))),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FaultlogRequest {
    Record(FaultRecord),
    FromSession {
        session: String,
        #[serde(default)]
        notes: String,
    },
}

async fn post_faultlog(State(st): Shared, Json(req): Json<FaultlogRequest>) -> Result<Response, ApiError> {
    let record = match req {
        FaultlogRequest::Record(r) => r,
        FaultlogRequest::FromSession { session, notes } => {
            let handle = st.session(&session)?;
            let s = handle.lock().await;
            FaultRecord::from_session(&s, notes).ok_or_else(|| {
                ApiError::new(StatusCode::CONFLICT, format!("session is {} and has no fault to record", s.status()))
            })?
        }
    };
    let mut store = st.faultlog.lock().await;
    let added = store.ingest(&st.kb, record.clone()).map_err(|e| match e {
        FmeaError::Io(m) => ApiError::internal(m),
        other => ApiError::bad_request(other),
    })?;
    let stored = store.records().iter().find(|r| r.session == record.session && r.ts == record.ts).cloned();
    let status = if added { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(json!({ "ingested": added, "record": stored, "records": store.len() }))).into_response())
}

#[derive(Deserialize)]
struct GridQuery {
    u_dc: f64,
    u_rf: f64,
    omega_rf: f64,
    /// Comma separated a,b,c.
    dc: String,
    rf: String,
    axes: Option<String>,
    u_min: f64,
    u_max: f64,
    v_min: f64,
    v_max: f64,
    nu: Option<usize>,
    nv: Option<usize>,
    t: Option<f64>,
    format: Option<String>,
}

pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected three comma separated numbers, got `{s}`"));
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok([num(a)?, num(b)?, num(c)?])
}

async fn potential_grid(Query(q): Query<GridQuery>) -> Result<Response, ApiError> {
    let params = PotentialParams {
        u_dc: q.u_dc,
        u_rf: q.u_rf,
        omega_rf: q.omega_rf,
        dc: parse_triple(&q.dc).map_err(ApiError::bad_request)?,
        rf: parse_triple(&q.rf).map_err(ApiError::bad_request)?,
    };
    let axes: AxisPair = q.axes.as_deref().unwrap_or("xy").parse().map_err(ApiError::bad_request)?;
    let n = [q.nu.unwrap_or(51), q.nv.unwrap_or(51)];
    if n[0].saturating_mul(n[1]) > MAX_GRID_CELLS {
        return Err(ApiError::bad_request(format!("at most {MAX_GRID_CELLS} cells per request")));
    }
    let grid = sample_grid(&params, axes, [(q.u_min, q.u_max), (q.v_min, q.v_max)], n, q.t.unwrap_or(0.0))
        .map_err(ApiError::bad_request)?;
    match q.format.as_deref().unwrap_or("json") {
        "json" => Ok(Json(grid).into_response()),
        "csv" => Ok(([(header::CONTENT_TYPE, "text/csv")], grid.to_csv()).into_response()),
        other => Err(ApiError::bad_request(format!("unknown format `{other}`"))),
    }
}

//! HTTP explorer service: load programs, list and apply redexes, roll back
//! to memories, and stream applied steps.

use std::collections::{BTreeSet, HashMap};
use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use respi_core::history::{rollback, Edge, Node, RollbackError, RollbackTarget};
use respi_core::parser::{parse_program, parse_type_env, ParseError};
use respi_core::types::{typecheck_config, ConfigVerdict, TypeEnv};
use respi_core::{
    build_graph, enumerate_backward, enumerate_forward, print_configuration, Configuration, Engine, MemoryGraph, RedexId,
    Step, StepError, Trace,
};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, Mutex};
use tokio_stream::wrappers::BroadcastStream;

/// Largest accepted request body.
pub const BODY_LIMIT: usize = 256 * 1024;
const EVENT_BUFFER: usize = 1024;

/// One loaded program and its run so far.
pub struct Session {
    pub id: u64,
    pub current: Configuration,
    pub trace: Trace,
    pub env: Option<TypeEnv>,
    engine: Engine,
    events: broadcast::Sender<StepEvent>,
}

impl Session {
    fn new(id: u64, config: Configuration, env: Option<TypeEnv>) -> Self {
        let mut engine = Engine::new();
        engine.reserve(&config);
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        Session { id, trace: Trace::new(config.clone()), current: config, env, engine, events }
    }

    fn record(&mut self, next: Configuration, step: Step) {
        self.current = next;
        self.trace.push(step.clone());
        // No subscribers is fine.
        let _ = self.events.send(StepEvent { index: self.trace.len() - 1, step });
    }
}

/// Sessions keyed by id. Each session sits behind its own lock, so steps
/// on one session are applied one at a time.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<u64, Arc<Mutex<Session>>>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    fn session(&self, id: u64) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no program {id}")))
    }

    fn insert(&self, config: Configuration, env: Option<TypeEnv>) -> u64 {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed) + 1;
        let session = Arc::new(Mutex::new(Session::new(id, config, env)));
        self.sessions.write().expect("session table poisoned").insert(id, session);
        id
    }
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<ParseError>,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        ApiError { status, error: error.into(), diagnostic: None }
    }

    fn parse(e: ParseError) -> Self {
        ApiError { status: StatusCode::UNPROCESSABLE_ENTITY, error: e.to_string(), diagnostic: Some(e) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

/// A configuration as structure and as text.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WireConfig {
    pub ast: Configuration,
    pub text: String,
}

impl From<&Configuration> for WireConfig {
    fn from(c: &Configuration) -> Self {
        WireConfig { ast: c.clone(), text: print_configuration(c) }
    }
}

#[derive(Debug, Deserialize)]
pub struct ProgramRequest {
    pub source: String,
    /// Declarations in the `.styp` format.
    #[serde(default)]
    pub types: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TypeReport {
    Checked(ConfigVerdict),
    /// No declarations were supplied.
    Unchecked { verdict: Unchecked },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unchecked {
    Unchecked,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProgramCreated {
    pub id: u64,
    pub configuration: WireConfig,
    pub types: TypeReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Redexes {
    pub forward: Vec<RedexId>,
    pub backward: Vec<RedexId>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct GraphDelta {
    pub added_nodes: Vec<Node>,
    pub removed_nodes: Vec<Node>,
    pub added_edges: Vec<Edge>,
    pub removed_edges: Vec<Edge>,
}

impl GraphDelta {
    fn between(before: &MemoryGraph, after: &MemoryGraph) -> Self {
        fn diff<T: Ord + Clone>(a: &[T], b: &[T]) -> Vec<T> {
            let a: BTreeSet<&T> = a.iter().collect();
            b.iter().filter(|x| !a.contains(x)).cloned().collect()
        }
        GraphDelta {
            added_nodes: diff(&before.nodes, &after.nodes),
            removed_nodes: diff(&after.nodes, &before.nodes),
            added_edges: diff(&before.edges, &after.edges),
            removed_edges: diff(&after.edges, &before.edges),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepResponse {
    pub configuration: WireConfig,
    pub step: Step,
    pub graph_delta: GraphDelta,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RollbackResponse {
    pub configuration: WireConfig,
    pub trace: Vec<Step>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GraphResponse {
    pub dot: String,
    pub graph: MemoryGraph,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TraceResponse {
    /// The trace file format.
    pub text: String,
    pub steps: Vec<Step>,
}

/// An applied step and its position in the session trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepEvent {
    pub index: usize,
    pub step: Step,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StepBody {
    Bare(RedexId),
    Wrapped { redex: RedexId },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RollbackBody {
    Bare(RollbackTarget),
    Wrapped {
        #[serde(alias = "memory")]
        target: RollbackTarget,
    },
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/programs", post(create_program))
        .route("/programs/{id}/redexes", get(redexes))
        .route("/programs/{id}/step", post(step))
        .route("/programs/{id}/rollback", post(rollback_to))
        .route("/programs/{id}/graph", get(graph))
        .route("/programs/{id}/trace", get(trace))
        .route("/programs/{id}/events", get(events))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::default())).await
}

fn load(source: &str, types: Option<&str>) -> Result<(Configuration, Option<TypeEnv>, TypeReport), ApiError> {
    let config = parse_program(source, None).map_err(ApiError::parse)?.config;
    let Some(types) = types else { return Ok((config, None, TypeReport::Unchecked { verdict: Unchecked::Unchecked })) };
    let env = parse_type_env(types, Some("types")).map_err(ApiError::parse)?;
    match typecheck_config(&config, &env) {
        ConfigVerdict::IllTyped { error } => Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, error.to_string())),
        verdict => Ok((config, Some(env), TypeReport::Checked(verdict))),
    }
}

async fn create_program(
    State(app): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<ProgramCreated>, ApiError> {
    let json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let req = if json {
        serde_json::from_slice::<ProgramRequest>(&body)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?
    } else {
        let source = String::from_utf8(body.to_vec())
            .map_err(|_| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "source is not UTF-8"))?;
        ProgramRequest { source, types: None }
    };
    let (config, env, types) = load(&req.source, req.types.as_deref())?;
    let configuration = WireConfig::from(&config);
    let id = app.insert(config, env);
    Ok(Json(ProgramCreated { id, configuration, types }))
}

async fn redexes(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<Redexes>, ApiError> {
    let session = app.session(id)?;
    let s = session.lock().await;
    Ok(Json(Redexes { forward: enumerate_forward(&s.current), backward: enumerate_backward(&s.current) }))
}

fn step_error(e: StepError) -> ApiError {
    match e {
        StepError::Stale(_) => ApiError::new(StatusCode::CONFLICT, e.to_string()),
        _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}

async fn step(
    State(app): State<AppState>,
    Path(id): Path<u64>,
    Json(body): Json<StepBody>,
) -> Result<Json<StepResponse>, ApiError> {
    let redex = match body {
        StepBody::Bare(r) | StepBody::Wrapped { redex: r } => r,
    };
    let session = app.session(id)?;
    let mut s = session.lock().await;
    let before = build_graph(&s.current);
    let current = s.current.clone();
    let (next, step) = s.engine.apply(&current, &redex).map_err(step_error)?;
    let graph_delta = GraphDelta::between(&before, &build_graph(&next));
    let configuration = WireConfig::from(&next);
    s.record(next, step.clone());
    Ok(Json(StepResponse { configuration, step, graph_delta }))
}

async fn rollback_to(
    State(app): State<AppState>,
    Path(id): Path<u64>,
    Json(body): Json<RollbackBody>,
) -> Result<Json<RollbackResponse>, ApiError> {
    let target = match body {
        RollbackBody::Bare(t) | RollbackBody::Wrapped { target: t } => t,
    };
    let session = app.session(id)?;
    let mut s = session.lock().await;
    let current = s.current.clone();
    let (_, undo) = rollback(&mut s.engine, &current, target).map_err(|e| match e {
        RollbackError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, e.to_string()),
        _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    })?;
    let mut cur = current;
    let configs = undo.configurations().map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    for (next, step) in configs.into_iter().skip(1).zip(undo.steps.iter().cloned()) {
        s.record(next.clone(), step);
        cur = next;
    }
    Ok(Json(RollbackResponse { configuration: WireConfig::from(&cur), trace: undo.steps }))
}

async fn graph(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<GraphResponse>, ApiError> {
    let session = app.session(id)?;
    let s = session.lock().await;
    let graph = build_graph(&s.current);
    Ok(Json(GraphResponse { dot: graph.to_dot(), graph }))
}

async fn trace(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Json<TraceResponse>, ApiError> {
    let session = app.session(id)?;
    let s = session.lock().await;
    Ok(Json(TraceResponse { text: s.trace.to_text(), steps: s.trace.steps.clone() }))
}

/// Every step of the session, past ones first, then live ones as they are
/// applied.
async fn events(
    State(app): State<AppState>,
    Path(id): Path<u64>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let session = app.session(id)?;
    let (past, live) = {
        let s = session.lock().await;
        let past: Vec<StepEvent> =
            s.trace.steps.iter().cloned().enumerate().map(|(index, step)| StepEvent { index, step }).collect();
        (past, s.events.subscribe())
    };
    // A lagging subscriber would miss steps, so its stream ends instead.
    let live = BroadcastStream::new(live).take_while(|r| std::future::ready(r.is_ok())).filter_map(|r| async { r.ok() });
    let stream = stream::iter(past).chain(live).map(|e| {
        Ok(Event::default().event("step").data(serde_json::to_string(&e).expect("steps serialize")))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

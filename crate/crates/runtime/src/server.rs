//! Live human play. The server owns the simulation: each session runs a realtime
//! episode on its own thread, takes key input from one websocket controller and
//! pushes a frame after every tick.
//!
//! HTTP:
//! - `POST /sessions` opens a paused session and returns its id and join token.
//! - `GET /sessions/{id}/ws?token=...` is the controller websocket.
//! - `GET /sessions/{id}/log` downloads the JSONL episode log.
//! - `POST /rankings` checks agent rankings and returns their Borda points.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dpt_core::agents::AgentKind;
use dpt_core::metrics::borda;
use dpt_core::AtomicAction;
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

use crate::config::ExperimentConfig;
use crate::episode::{Controls, Episode, InputSlot, RunMode};
use crate::frame::{build_frame, Frame, PROTOCOL};
use crate::logio::LogWriter;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Defaults for new sessions. `agent` drives the AI seat.
    pub experiment: ExperimentConfig,
    /// Sessions that may run at once.
    pub capacity: usize,
    /// How long a session keeps running after its controller disconnects.
    pub grace: Duration,
    pub log_dir: PathBuf,
}

/// Optional overrides in the body of `POST /sessions`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpenRequest {
    pub agent: Option<AgentKind>,
    pub seed: Option<u64>,
    pub horizon: Option<u32>,
    pub tick_period: Option<f64>,
    /// Seat the human plays. Defaults to 1, so seat 0 is the agent.
    pub human_seat: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenResponse {
    pub protocol: u32,
    pub id: String,
    pub token: String,
    pub human_seat: usize,
    pub agent: AgentKind,
    /// Websocket path, token included.
    pub ws: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ClientMsg {
    Ready,
    Input { key: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ServerMsg {
    Frame {
        protocol: u32,
        #[serde(flatten)]
        frame: Frame,
    },
    End {
        protocol: u32,
        score: i32,
        log_id: String,
    },
}

/// Maps a client key to an atomic action. Unknown keys map to nothing.
pub fn key_action(key: &str) -> Option<AtomicAction> {
    Some(match key {
        "up" | "ArrowUp" => AtomicAction::Up,
        "down" | "ArrowDown" => AtomicAction::Down,
        "left" | "ArrowLeft" => AtomicAction::Left,
        "right" | "ArrowRight" => AtomicAction::Right,
        "space" | " " => AtomicAction::Interact,
        _ => return None,
    })
}

struct Session {
    token: String,
    controls: Arc<Controls>,
    input: Arc<InputSlot>,
    messages: watch::Receiver<ServerMsg>,
    connected: AtomicBool,
    /// Bumped on every connect, so a stale grace timer can tell it lost.
    connection: AtomicU64,
    finished: Arc<AtomicBool>,
    log_path: PathBuf,
}

pub struct AppState {
    config: ServerConfig,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
    next: AtomicU64,
}

pub fn router(config: ServerConfig) -> Router {
    let state = Arc::new(AppState { config, sessions: Mutex::new(HashMap::new()), next: AtomicU64::new(1) });
    Router::new()
        .route("/sessions", post(open_session))
        .route("/sessions/{id}/ws", get(join_session))
        .route("/sessions/{id}/log", get(download_log))
        .route("/rankings", post(submit_rankings))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "protocol": PROTOCOL, "error": message.into() }))).into_response()
}

/// Unguessable enough for a local study server.
fn token() -> String {
    use std::hash::{BuildHasher, Hasher};
    let mut out = String::new();
    for _ in 0..2 {
        let mut h = std::collections::hash_map::RandomState::new().build_hasher();
        h.write_u128(std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap_or_default().as_nanos());
        out.push_str(&format!("{:016x}", h.finish()));
    }
    out
}

async fn open_session(State(app): State<Arc<AppState>>, body: Option<Json<OpenRequest>>) -> Response {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    {
        let sessions = app.sessions.lock().expect("sessions lock");
        let live = sessions.values().filter(|s| !s.finished.load(Ordering::SeqCst)).count();
        if live >= app.config.capacity {
            let mut r = error(StatusCode::SERVICE_UNAVAILABLE, "session capacity reached");
            r.headers_mut().insert(header::RETRY_AFTER, header::HeaderValue::from_static("10"));
            return r;
        }
    }
    let mut cfg = app.config.experiment.clone();
    cfg.mode = RunMode::Realtime;
    cfg.agent = req.agent.unwrap_or(cfg.agent);
    cfg.seed = req.seed.unwrap_or(cfg.seed);
    cfg.horizon = req.horizon.unwrap_or(cfg.horizon);
    cfg.tick_period = req.tick_period.unwrap_or(cfg.tick_period);
    cfg.partner = None;
    let human_seat = req.human_seat.unwrap_or(1);
    if human_seat > 1 || cfg.agent == AgentKind::Human {
        return error(StatusCode::UNPROCESSABLE_ENTITY, "sessions seat one agent and one human");
    }
    if let Err(e) = cfg.validate() {
        return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string());
    }
    let mut setup = match cfg.setup(cfg.seed) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    setup.seats = if human_seat == 0 { vec![AgentKind::Human, cfg.agent] } else { vec![cfg.agent, AgentKind::Human] };

    let id = format!("s{:04}-{}", app.next.fetch_add(1, Ordering::SeqCst), &token()[..8]);
    let log_path = app.config.log_dir.join(format!("{id}.jsonl"));
    let writer = match LogWriter::create(&log_path) {
        Ok(w) => w,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let controls = Arc::new(Controls::paused());
    let input = Arc::new(InputSlot::default());
    let episode = match Episode::new(setup) {
        Ok(e) => e,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    let seats = [human_seat];
    let first = ServerMsg::Frame { protocol: PROTOCOL, frame: build_frame(episode.state(), &seats, true) };
    let (tx, rx) = watch::channel(first);
    let finished = Arc::new(AtomicBool::new(false));
    let session = Arc::new(Session {
        token: token(),
        controls: controls.clone(),
        input: input.clone(),
        messages: rx,
        connected: AtomicBool::new(false),
        connection: AtomicU64::new(0),
        finished: finished.clone(),
        log_path,
    });

    let log_id = id.clone();
    let tick_tx = tx.clone();
    std::thread::spawn(move || {
        let ctl = controls.clone();
        let result = episode
            .with_controls(controls)
            .with_input(human_seat, input)
            .with_writer(writer)
            .on_tick(move |state, _| {
                let frame = build_frame(state, &seats, ctl.is_paused());
                tick_tx.send_replace(ServerMsg::Frame { protocol: PROTOCOL, frame });
            })
            .run();
        let score = match result {
            Ok(r) => r.log.final_score(),
            Err(e) => {
                tracing::error!(session = %log_id, error = %e, "session failed");
                0
            }
        };
        tx.send_replace(ServerMsg::End { protocol: PROTOCOL, score, log_id });
        finished.store(true, Ordering::SeqCst);
    });

    let resp = OpenResponse {
        protocol: PROTOCOL,
        ws: format!("/sessions/{id}/ws?token={}", session.token),
        token: session.token.clone(),
        id: id.clone(),
        human_seat,
        agent: cfg.agent,
    };
    app.sessions.lock().expect("sessions lock").insert(id, session);
    (StatusCode::CREATED, Json(resp)).into_response()
}

fn session(app: &AppState, id: &str) -> Option<Arc<Session>> {
    app.sessions.lock().expect("sessions lock").get(id).cloned()
}

#[derive(Debug, Deserialize)]
struct JoinQuery {
    token: String,
}

async fn join_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<JoinQuery>,
    ws: WebSocketUpgrade,
) -> Response {
    let Some(s) = session(&app, &id) else { return error(StatusCode::NOT_FOUND, "no such session") };
    if q.token != s.token {
        return error(StatusCode::FORBIDDEN, "bad token");
    }
    if s.connected.swap(true, Ordering::SeqCst) {
        return error(StatusCode::CONFLICT, "the human seat already has a controller");
    }
    let generation = s.connection.fetch_add(1, Ordering::SeqCst) + 1;
    let grace = app.config.grace;
    ws.on_upgrade(move |socket| async move {
        drive(socket, s.clone()).await;
        s.connected.store(false, Ordering::SeqCst);
        tokio::spawn(async move {
            tokio::time::sleep(grace).await;
            if !s.connected.load(Ordering::SeqCst) && s.connection.load(Ordering::SeqCst) == generation {
                tracing::info!("controller gone past the grace period, pausing");
                s.controls.set_paused(true);
            }
        });
    })
}

/// Pumps frames out and inputs in until either side stops.
async fn drive(socket: WebSocket, s: Arc<Session>) {
    let (mut sink, mut stream) = socket.split();
    let mut messages = s.messages.clone();
    let outbound = async {
        loop {
            let msg = messages.borrow_and_update().clone();
            let text = serde_json::to_string(&msg).expect("message serializes");
            if sink.send(Message::Text(text.into())).await.is_err() {
                return;
            }
            if matches!(msg, ServerMsg::End { .. }) {
                let _ = sink.send(Message::Close(None)).await;
                return;
            }
            if messages.changed().await.is_err() {
                return;
            }
        }
    };
    let inbound = async {
        while let Some(Ok(m)) = stream.next().await {
            let Message::Text(text) = m else {
                if matches!(m, Message::Close(_)) {
                    return;
                }
                continue;
            };
            match serde_json::from_str::<ClientMsg>(&text) {
                Ok(ClientMsg::Ready) => {
                    if !s.finished.load(Ordering::SeqCst) {
                        s.controls.set_paused(false);
                    }
                }
                Ok(ClientMsg::Input { key }) => {
                    if let Some(a) = key_action(&key) {
                        s.input.set(a);
                    }
                }
                Err(e) => tracing::debug!(error = %e, "ignoring client message"),
            }
        }
    };
    tokio::select! {
        _ = outbound => {}
        _ = inbound => {}
    }
}

async fn download_log(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(s) = session(&app, &id) else { return error(StatusCode::NOT_FOUND, "no such session") };
    match tokio::fs::read(&s.log_path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/x-ndjson")], bytes).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingSubmission {
    #[serde(default)]
    pub protocol: Option<u32>,
    /// Each ranking lists agent ids from best to worst.
    pub rankings: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub protocol: u32,
    pub scores: BTreeMap<String, u32>,
}

async fn submit_rankings(Json(sub): Json<RankingSubmission>) -> Response {
    if sub.protocol.is_some_and(|p| p != PROTOCOL) {
        return error(StatusCode::UNPROCESSABLE_ENTITY, format!("unsupported protocol, expected {PROTOCOL}"));
    }
    if sub.rankings.is_empty() {
        return error(StatusCode::UNPROCESSABLE_ENTITY, "no rankings submitted");
    }
    match borda(&sub.rankings) {
        Ok(scores) => Json(RankingResult { protocol: PROTOCOL, scores }).into_response(),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}

/// Serves until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, config: ServerConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "game server listening");
    axum::serve(listener, router(config)).await
}

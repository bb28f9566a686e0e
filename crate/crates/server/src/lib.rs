//! Blind-box game sessions over HTTP/JSON.
//!
//! Sessions live in memory; each is behind its own lock, so requests to one
//! session are applied in order while different sessions proceed in
//! parallel. An optional journal records every accepted operation and is
//! replayed on start-up.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use qcc_core::blindbox::{new_session, GameConfig, GameSession, GameState, Play, RewardLog};
use qcc_core::ChannelParams;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

pub mod journal;

use journal::{Entry, Journal};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    NotFound(String),
    #[error(transparent)]
    Game(#[from] qcc_core::Error),
    #[error("{0}")]
    BadRequest(String),
    #[error("journal: {0}")]
    Journal(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    fn status(&self) -> StatusCode {
        use qcc_core::Error as E;
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Game(E::SessionClosed) => StatusCode::CONFLICT,
            ServiceError::Game(_) | ServiceError::BadRequest(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Journal(_) | ServiceError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}

impl From<JsonRejection> for ServiceError {
    fn from(r: JsonRejection) -> Self {
        ServiceError::BadRequest(r.body_text())
    }
}

type Shared = Arc<Mutex<GameSession>>;

#[derive(Debug, Default)]
struct Inner {
    sessions: RwLock<HashMap<String, Shared>>,
    journal: Option<Mutex<Journal>>,
}

/// Session store shared by all handlers.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// In-memory store without a journal.
    pub fn new() -> Self {
        Self::default()
    }

    /// Store backed by `path`; existing entries are replayed first.
    pub fn with_journal(path: &Path) -> Result<Self, ServiceError> {
        let (journal, entries) = Journal::open(path)?;
        let sessions = replay(&entries)?;
        let sessions = sessions.into_iter().map(|(id, s)| (id, Arc::new(Mutex::new(s)))).collect();
        Ok(Self {
            inner: Arc::new(Inner { sessions: RwLock::new(sessions), journal: Some(Mutex::new(journal)) }),
        })
    }

    fn get(&self, id: &str) -> Result<Shared, ServiceError> {
        self.inner
            .sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    fn record(&self, entry: &Entry) -> Result<(), ServiceError> {
        if let Some(j) = &self.inner.journal {
            j.lock().expect("journal lock").append(entry)?;
        }
        Ok(())
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.read().expect("session map lock").len()
    }
}

/// Rebuilds sessions by re-running every journaled operation.
pub fn replay(entries: &[Entry]) -> Result<HashMap<String, GameSession>, ServiceError> {
    let mut sessions = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        let line = i + 1;
        let bad = |reason: String| ServiceError::Journal(format!("entry {line}: {reason}"));
        match e {
            Entry::Create { id, seed, config } => {
                let s = new_session(*seed, *config).map_err(|e| bad(e.to_string()))?;
                sessions.insert(id.clone(), s);
            }
            Entry::Play { id, intensity } => {
                let s = sessions.get_mut(id).ok_or_else(|| bad(format!("unknown session {id}")))?;
                s.play(*intensity).map_err(|e| bad(e.to_string()))?;
            }
            Entry::Guess { id, missing } => {
                let s = sessions.get_mut(id).ok_or_else(|| bad(format!("unknown session {id}")))?;
                s.guess(missing).map_err(|e| bad(e.to_string()))?;
            }
        }
    }
    Ok(sessions)
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub n: usize,
    pub m: usize,
    pub eta: f64,
    pub dark: f64,
    pub vis: f64,
    pub seed: Option<u64>,
    #[serde(default)]
    pub reward_log: RewardLog,
}

#[derive(Debug, Deserialize)]
pub struct PlayRequest {
    pub intensity: f64,
}

#[derive(Debug, Deserialize)]
pub struct GuessRequest {
    pub missing: Vec<usize>,
}

/// What the player may see. The hidden set is only filled in once the
/// game is over.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionEnvelope {
    pub session_id: String,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub eta: f64,
    pub dark: f64,
    pub vis: f64,
    pub reward: f64,
    pub spent: f64,
    pub plays: Vec<Play>,
    pub state: GameState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub net: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub revealed_missing: Option<Vec<usize>>,
}

impl SessionEnvelope {
    pub fn of(id: &str, s: &GameSession) -> Self {
        let c = s.config();
        let closed = s.state() != GameState::Open;
        Self {
            session_id: id.to_string(),
            seed: s.seed(),
            n: c.n,
            m: c.m,
            eta: c.params.eta(),
            dark: c.params.dark_rate(),
            vis: c.params.visibility(),
            reward: c.reward(),
            spent: s.spent(),
            plays: s.plays().to_vec(),
            state: s.state(),
            payoff: closed.then(|| s.payoff()),
            net: closed.then(|| s.net()),
            revealed_missing: s.revealed_missing().map(<[usize]>::to_vec),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlayResponse {
    pub session_id: String,
    pub play_index: usize,
    pub intensity: f64,
    pub price: f64,
    pub clicked_bins: Vec<usize>,
    pub spent: f64,
    pub state: GameState,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GuessResponse {
    pub session_id: String,
    pub state: GameState,
    pub payoff: f64,
    pub spent: f64,
    pub net: f64,
    pub revealed_missing: Vec<usize>,
}

async fn create(
    State(app): State<AppState>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionEnvelope>), ServiceError> {
    let Json(req) = body?;
    let params = ChannelParams::new(req.eta, req.dark, req.vis)?;
    let config = GameConfig { n: req.n, m: req.m, params, reward_log: req.reward_log };
    let seed = req.seed.unwrap_or_else(rand::random);
    let session = new_session(seed, config)?;
    let id = uuid::Uuid::new_v4().to_string();
    let envelope = SessionEnvelope::of(&id, &session);
    {
        // journal under the map lock so a create is never seen before it is
        // recorded
        let mut map = app.inner.sessions.write().expect("session map lock");
        app.record(&Entry::Create { id: id.clone(), seed, config })?;
        map.insert(id, Arc::new(Mutex::new(session)));
    }
    Ok((StatusCode::CREATED, Json(envelope)))
}

async fn fetch(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionEnvelope>, ServiceError> {
    let shared = app.get(&id)?;
    let s = shared.lock().expect("session lock");
    Ok(Json(SessionEnvelope::of(&id, &s)))
}

async fn play(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<PlayRequest>, JsonRejection>,
) -> Result<Json<PlayResponse>, ServiceError> {
    let shared = app.get(&id)?;
    let Json(req) = body?;
    let mut s = shared.lock().expect("session lock");
    let p = s.play(req.intensity)?.clone();
    app.record(&Entry::Play { id: id.clone(), intensity: req.intensity })?;
    Ok(Json(PlayResponse {
        session_id: id,
        play_index: s.plays().len() - 1,
        intensity: p.intensity,
        price: p.price,
        clicked_bins: p.clicked_bins,
        spent: s.spent(),
        state: s.state(),
    }))
}

async fn guess(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<GuessRequest>, JsonRejection>,
) -> Result<Json<GuessResponse>, ServiceError> {
    let shared = app.get(&id)?;
    let Json(req) = body?;
    let mut s = shared.lock().expect("session lock");
    let res = s.guess(&req.missing)?;
    app.record(&Entry::Guess { id: id.clone(), missing: req.missing })?;
    Ok(Json(GuessResponse {
        session_id: id,
        state: res.state,
        payoff: res.payoff,
        spent: s.spent(),
        net: res.net,
        revealed_missing: res.revealed_missing,
    }))
}

async fn healthz() -> &'static str {
    "ok"
}

/// All routes, with CORS for `cors_origin` when given.
pub fn router(state: AppState, cors_origin: Option<&str>) -> Result<Router, ServiceError> {
    let mut app = Router::new()
        .route("/healthz", get(healthz))
        .route("/games", post(create))
        .route("/games/{id}", get(fetch))
        .route("/games/{id}/plays", post(play))
        .route("/games/{id}/guess", post(guess))
        .with_state(state);
    if let Some(origin) = cors_origin {
        let origin = HeaderValue::from_str(origin)
            .map_err(|_| ServiceError::BadRequest(format!("invalid CORS origin {origin:?}")))?;
        app = app.layer(
            CorsLayer::new()
                .allow_origin(origin)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([axum::http::header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    pub journal: Option<std::path::PathBuf>,
    pub cors_origin: Option<String>,
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, opts: ServeOptions) -> Result<(), ServiceError> {
    let state = match &opts.journal {
        Some(p) => AppState::with_journal(p)?,
        None => AppState::new(),
    };
    let app = router(state, opts.cors_origin.as_deref())?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

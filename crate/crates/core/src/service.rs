//! HTTP JSON API: session-scoped asking, feedback capture and history.
//!
//! `GET /health`, `POST /ask`, `POST /feedback`, `GET /sessions/{id}/history`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::AppConfig;
use crate::engine::{Engine, SourceRef};
use crate::error::Error;
use crate::fusion::RetrievalMode;
use crate::llm::Usage;
use crate::prompt::HistoryTurn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub message_id: String,
    pub question: String,
    pub answer: String,
    pub sources: Vec<SourceRef>,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug)]
pub struct Session {
    pub session_id: String,
    /// Most recent turns fed back into prompts, at most `history_depth`.
    pub history: VecDeque<HistoryTurn>,
    /// Every turn in this session, for clients rebuilding the thread.
    pub transcript: Vec<Turn>,
    pub created_at: DateTime<Utc>,
    pub last_active: DateTime<Utc>,
    message_ids: HashSet<String>,
}

impl Session {
    fn new(session_id: String) -> Self {
        let now = Utc::now();
        Self {
            session_id,
            history: VecDeque::new(),
            transcript: Vec::new(),
            created_at: now,
            last_active: now,
            message_ids: HashSet::new(),
        }
    }

    fn record(&mut self, turn: Turn, depth: usize) {
        self.history.push_back(HistoryTurn {
            question: turn.question.clone(),
            answer: turn.answer.clone(),
        });
        while self.history.len() > depth {
            self.history.pop_front();
        }
        self.message_ids.insert(turn.message_id.clone());
        self.last_active = turn.timestamp.max(self.created_at);
        self.transcript.push(turn);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub session_id: String,
    pub message_id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub timestamp: DateTime<Utc>,
}

/// Latest verdict per message, mirrored to an append-only JSON Lines log.
/// Replaying the log and keeping the last record per message id gives the
/// current state.
pub struct FeedbackStore {
    records: HashMap<String, FeedbackRecord>,
    log: Option<BufWriter<File>>,
}

impl FeedbackStore {
    pub fn in_memory() -> Self {
        Self {
            records: HashMap::new(),
            log: None,
        }
    }

    /// Opens (or creates) the log and replays it. Unparseable lines are
    /// skipped with a warning.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let mut records = HashMap::new();
        match std::fs::read_to_string(path) {
            Ok(text) => {
                for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                    match serde_json::from_str::<FeedbackRecord>(line) {
                        Ok(r) => {
                            records.insert(r.message_id.clone(), r);
                        }
                        Err(e) => log::warn!("{}:{}: skipping feedback line: {e}", path.display(), n + 1),
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            records,
            log: Some(BufWriter::new(file)),
        })
    }

    /// Returns true when an earlier verdict for the same message was replaced.
    pub fn upsert(&mut self, record: FeedbackRecord) -> std::io::Result<bool> {
        if let Some(log) = self.log.as_mut() {
            serde_json::to_writer(&mut *log, &record)?;
            log.write_all(b"\n")?;
            log.flush()?;
        }
        Ok(self.records.insert(record.message_id.clone(), record).is_some())
    }

    pub fn get(&self, message_id: &str) -> Option<&FeedbackRecord> {
        self.records.get(message_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        match self.log.as_mut() {
            Some(log) => log.flush(),
            None => Ok(()),
        }
    }
}

type SessionHandle = Arc<tokio::sync::Mutex<Session>>;

pub struct AppState {
    pub engine: Arc<Engine>,
    sessions: Mutex<HashMap<String, SessionHandle>>,
    pub feedback: Mutex<FeedbackStore>,
    transcript_log: Option<Mutex<BufWriter<File>>>,
    history_depth: usize,
    session_ttl: Duration,
}

impl AppState {
    pub fn new(engine: Engine, feedback: FeedbackStore, history_depth: usize, session_ttl: Duration) -> Self {
        Self {
            engine: Arc::new(engine),
            sessions: Mutex::new(HashMap::new()),
            feedback: Mutex::new(feedback),
            transcript_log: None,
            history_depth: history_depth.max(1),
            session_ttl,
        }
    }

    pub fn with_transcript_log(mut self, path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.transcript_log = Some(Mutex::new(BufWriter::new(file)));
        Ok(self)
    }

    fn session(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.lock().expect("session map poisoned").get(id).cloned()
    }

    fn session_or_create(&self, id: &str) -> SessionHandle {
        self.sessions
            .lock()
            .expect("session map poisoned")
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(tokio::sync::Mutex::new(Session::new(id.to_string()))))
            .clone()
    }

    /// Drops idle sessions. Sessions busy with a request are kept.
    fn evict_idle(&self) {
        let Ok(ttl) = chrono::Duration::from_std(self.session_ttl) else {
            return;
        };
        let cutoff = Utc::now() - ttl;
        self.sessions
            .lock()
            .expect("session map poisoned")
            .retain(|_, s| s.try_lock().map_or(true, |s| s.last_active >= cutoff));
    }

    fn log_turn(&self, session_id: &str, turn: &Turn) {
        let Some(log) = &self.transcript_log else {
            return;
        };
        let mut log = log.lock().expect("transcript log poisoned");
        let line = json!({ "session_id": session_id, "turn": turn });
        let res = serde_json::to_writer(&mut *log, &line)
            .map_err(std::io::Error::from)
            .and_then(|_| log.write_all(b"\n"))
            .and_then(|_| log.flush());
        if let Err(e) = res {
            log::warn!("failed to append transcript: {e}");
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct AskBody {
    #[serde(default)]
    pub session_id: Option<String>,
    pub question: String,
    #[serde(default)]
    pub mode: Option<RetrievalMode>,
    #[serde(default)]
    pub adh: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AskResponse {
    pub session_id: String,
    pub message_id: String,
    pub answer: String,
    pub sources: Vec<SourceRef>,
    pub usage: Usage,
}

#[derive(Debug, Clone, Deserialize)]
pub struct FeedbackBody {
    pub session_id: String,
    pub message_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub comment: Option<String>,
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::EmptyQuery | Error::InvalidTopK | Error::InvalidConfig(_) | Error::UnknownVariant { .. } => {
                StatusCode::BAD_REQUEST
            }
            Error::Backend { .. } | Error::Provider(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "chunks": state.engine.index.chunks.len() }))
}

async fn ask(State(state): State<Arc<AppState>>, Json(body): Json<AskBody>) -> Result<Json<AskResponse>, ApiError> {
    if body.question.trim().is_empty() {
        return Err(Error::EmptyQuery.into());
    }
    state.evict_idle();
    let session_id = body
        .session_id
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
    let handle = state.session_or_create(&session_id);
    // Held across the completion: one in-flight request per session.
    let mut session = handle.lock().await;

    let history: Vec<HistoryTurn> = session.history.iter().cloned().collect();
    let opts = state
        .engine
        .options(body.mode.unwrap_or(RetrievalMode::Hybrid), body.adh.unwrap_or(true));
    let engine = state.engine.clone();
    let question = body.question.clone();
    let outcome = tokio::task::spawn_blocking(move || engine.ask(&question, &history, &opts))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;

    let sources = state.engine.source_refs(&outcome.envelope.sources);
    let turn = Turn {
        message_id: uuid::Uuid::new_v4().to_string(),
        question: body.question,
        answer: outcome.envelope.answer,
        sources,
        timestamp: Utc::now(),
    };
    state.log_turn(&session_id, &turn);
    let response = AskResponse {
        session_id: session_id.clone(),
        message_id: turn.message_id.clone(),
        answer: turn.answer.clone(),
        sources: turn.sources.clone(),
        usage: outcome.envelope.usage,
    };
    session.record(turn, state.history_depth);
    Ok(Json(response))
}

async fn feedback(
    State(state): State<Arc<AppState>>,
    Json(body): Json<FeedbackBody>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let not_found = || ApiError(StatusCode::NOT_FOUND, format!("unknown message {} in session {}", body.message_id, body.session_id));
    let handle = state.session(&body.session_id).ok_or_else(not_found)?;
    if !handle.lock().await.message_ids.contains(&body.message_id) {
        return Err(not_found());
    }
    let record = FeedbackRecord {
        session_id: body.session_id.clone(),
        message_id: body.message_id.clone(),
        verdict: body.verdict,
        comment: body.comment.clone(),
        timestamp: Utc::now(),
    };
    state
        .feedback
        .lock()
        .expect("feedback store poisoned")
        .upsert(record)
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(json!({ "ok": true })))
}

async fn history(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Vec<Turn>>, ApiError> {
    let handle = state
        .session(&id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown session {id}")))?;
    let session = handle.lock().await;
    Ok(Json(session.transcript.clone()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/ask", post(ask))
        .route("/feedback", post(feedback))
        .route("/sessions/{id}/history", get(history))
        .with_state(state)
}

/// Runs until interrupted, then flushes the feedback log.
pub async fn serve(config: AppConfig) -> anyhow::Result<()> {
    let engine = config.open_engine()?;
    let feedback = FeedbackStore::open(&config.feedback_path)?;
    let mut state = AppState::new(
        engine,
        feedback,
        config.history_depth,
        Duration::from_secs(config.session_ttl_secs),
    );
    if let Some(path) = &config.transcript_path {
        state = state.with_transcript_log(path)?;
    }
    let state = Arc::new(state);
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    log::info!(
        "serving {} chunks on http://{}",
        state.engine.index.chunks.len(),
        listener.local_addr()?
    );
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    state.feedback.lock().expect("feedback store poisoned").flush()?;
    Ok(())
}

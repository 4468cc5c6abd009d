//! HTTP session service: load models, open diagnosis sessions and submit
//! measurements one at a time.
//!
//! Each session is serialized by its own lock. With a journal directory,
//! every session appends its events to `<dir>/<session>.jsonl` and
//! [`AppState::recover`] rebuilds sessions from those files.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mbd_core::validate::validate;
use mbd_core::{assess, Assessment, DiagnosisConfig, Observation, PropagationError, Status, SystemModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{DocumentError, ModelDocument, ObservationDoc};
use crate::options::{config, ModeOpt, RuleOpt, StrategyOpt};
use crate::report::{evidence_rows, focus_rows, status_name, EvidenceRow, FocusRow, ProbeReport};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("invalid request body: {0}")]
    BadRequest(String),
    #[error("{0}")]
    InvalidModel(String),
    #[error("session `{0}` has ended")]
    SessionClosed(String),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("journal: {0}")]
    Journal(#[from] std::io::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownModel(_) => "unknown_model",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::InvalidModel(_) => "invalid_model",
            ServiceError::SessionClosed(_) => "session_closed",
            ServiceError::Propagation(e) => match e {
                PropagationError::UnknownComponent(_) => "unknown_component",
                PropagationError::NotObservable(_) => "not_observable",
                PropagationError::TimeOutOfRange { .. } => "time_out_of_range",
                PropagationError::ValueOutOfDomain { .. } => "value_out_of_domain",
                PropagationError::DuplicateObservation { .. } => "duplicate_measurement",
                _ => "propagation_failed",
            },
            ServiceError::Journal(_) => "journal_failed",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownModel(_) | ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::SessionClosed(_) => StatusCode::CONFLICT,
            ServiceError::Propagation(PropagationError::DuplicateObservation { .. }) => StatusCode::CONFLICT,
            ServiceError::Propagation(
                PropagationError::UnknownComponent(_)
                | PropagationError::NotObservable(_)
                | PropagationError::TimeOutOfRange { .. }
                | PropagationError::ValueOutOfDomain { .. },
            ) => StatusCode::BAD_REQUEST,
            ServiceError::InvalidModel(_) | ServiceError::Propagation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Journal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.code().to_string(), message: self.to_string() };
        (self.status(), Json(body)).into_response()
    }
}

impl From<JsonRejection> for ServiceError {
    fn from(r: JsonRejection) -> Self {
        ServiceError::BadRequest(r.body_text())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelCreated {
    pub model_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpenSession {
    pub model_id: String,
    #[serde(default)]
    pub rule: RuleOpt,
    #[serde(default)]
    pub mode: ModeOpt,
    #[serde(default)]
    pub strategy: StrategyOpt,
}

/// One accepted measurement and what followed from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub measurement: ObservationDoc,
    pub status: String,
    pub focuses: Vec<FocusRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice: Option<ProbeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub model_id: String,
    pub rule: RuleOpt,
    pub mode: ModeOpt,
    pub strategy: StrategyOpt,
    /// `active`, `diagnosed`, `exhausted` or `inconsistent`.
    pub status: String,
    pub observations: Vec<ObservationDoc>,
    pub evidence: Vec<EvidenceRow>,
    pub focuses: Vec<FocusRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice: Option<ProbeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<Vec<String>>,
    pub transcript: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
enum JournalEvent {
    Open { model_id: String, request: OpenSession, model: ModelDocument },
    Measurement { observation: ObservationDoc },
}

struct StoredModel {
    document: ModelDocument,
    model: Arc<SystemModel>,
}

struct Session {
    id: String,
    request: OpenSession,
    model: Arc<SystemModel>,
    config: DiagnosisConfig,
    observations: Vec<Observation>,
    assessment: Assessment,
    transcript: Vec<TranscriptEntry>,
    journal: Option<File>,
}

pub fn service_status(status: &Status) -> &'static str {
    match status {
        Status::Healthy | Status::Open => "active",
        other => status_name(other),
    }
}

impl Session {
    fn open(
        id: String,
        request: OpenSession,
        model: Arc<SystemModel>,
        journal: Option<File>,
    ) -> Result<Self, ServiceError> {
        let config = config(request.rule, request.mode, request.strategy);
        let assessment = assess(&model, &[], &config)?;
        Ok(Session { id, request, model, config, observations: Vec::new(), assessment, transcript: Vec::new(), journal })
    }

    fn measure(&mut self, observation: Observation) -> Result<(), ServiceError> {
        if self.assessment.status.is_terminal() {
            return Err(ServiceError::SessionClosed(self.id.clone()));
        }
        let mut observations = self.observations.clone();
        observations.push(observation.clone());
        let assessment = assess(&self.model, &observations, &self.config)?;
        if let Some(f) = &mut self.journal {
            let event = JournalEvent::Measurement { observation: (&observation).into() };
            writeln!(f, "{}", serde_json::to_string(&event).expect("journal event serializes"))?;
            f.flush()?;
        }
        self.observations = observations;
        self.assessment = assessment;
        let m = &self.model;
        self.transcript.push(TranscriptEntry {
            measurement: (&observation).into(),
            status: service_status(&self.assessment.status).to_string(),
            focuses: focus_rows(m, &self.assessment.focuses),
            advice: self.assessment.advice.as_ref().map(|a| ProbeReport::new(m, a)),
        });
        Ok(())
    }

    fn view(&self) -> SessionView {
        let m = &self.model;
        let a = &self.assessment;
        SessionView {
            id: self.id.clone(),
            model_id: self.request.model_id.clone(),
            rule: self.request.rule,
            mode: self.request.mode,
            strategy: self.request.strategy,
            status: service_status(&a.status).to_string(),
            observations: self.observations.iter().map(ObservationDoc::from).collect(),
            evidence: evidence_rows(m, &a.evidence),
            focuses: focus_rows(m, &a.focuses),
            advice: a.advice.as_ref().map(|p| ProbeReport::new(m, p)),
            diagnosis: match &a.status {
                Status::Diagnosed(c) => {
                    let mut ids: Vec<String> = c.iter().map(|c| m.id(*c).to_string()).collect();
                    ids.sort();
                    Some(ids)
                }
                _ => None,
            },
            transcript: self.transcript.clone(),
        }
    }
}

#[derive(Default)]
pub struct AppState {
    models: RwLock<HashMap<String, Arc<StoredModel>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    next_model: AtomicU64,
    next_session: AtomicU64,
    journal_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_journal(dir: impl Into<PathBuf>) -> Self {
        AppState { journal_dir: Some(dir.into()), ..Self::default() }
    }

    /// Parses and validates a model document, returning its id.
    pub fn add_model(&self, document: ModelDocument) -> Result<String, ServiceError> {
        let model = document.to_model().map_err(|e: DocumentError| ServiceError::InvalidModel(e.to_string()))?;
        let report = validate(&model);
        if !report.is_valid() {
            let msgs: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
            return Err(ServiceError::InvalidModel(msgs.join("; ")));
        }
        let id = format!("m{}", self.next_model.fetch_add(1, Ordering::Relaxed) + 1);
        self.insert_model(id.clone(), document, model);
        Ok(id)
    }

    fn insert_model(&self, id: String, document: ModelDocument, model: SystemModel) {
        let stored = Arc::new(StoredModel { document, model: Arc::new(model) });
        self.models.write().expect("model table lock").insert(id, stored);
    }

    fn model(&self, id: &str) -> Result<Arc<StoredModel>, ServiceError> {
        self.models.read().expect("model table lock").get(id).cloned().ok_or_else(|| ServiceError::UnknownModel(id.into()))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.into()))
    }

    fn journal_path(&self, id: &str) -> Option<PathBuf> {
        self.journal_dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    pub fn open_session(&self, request: OpenSession) -> Result<SessionView, ServiceError> {
        let stored = self.model(&request.model_id)?;
        let id = format!("s{}", self.next_session.fetch_add(1, Ordering::Relaxed) + 1);
        let journal = match self.journal_path(&id) {
            Some(path) => {
                let mut f = OpenOptions::new().create_new(true).append(true).open(path)?;
                let event = JournalEvent::Open {
                    model_id: request.model_id.clone(),
                    request: request.clone(),
                    model: stored.document.clone(),
                };
                writeln!(f, "{}", serde_json::to_string(&event).expect("journal event serializes"))?;
                f.flush()?;
                Some(f)
            }
            None => None,
        };
        let session = Session::open(id.clone(), request, stored.model.clone(), journal)?;
        let view = session.view();
        self.sessions.write().expect("session table lock").insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn measure(&self, session: &str, observation: Observation) -> Result<SessionView, ServiceError> {
        let s = self.session(session)?;
        let mut s = s.lock().expect("session lock");
        s.measure(observation)?;
        Ok(s.view())
    }

    pub fn view(&self, session: &str) -> Result<SessionView, ServiceError> {
        Ok(self.session(session)?.lock().expect("session lock").view())
    }

    pub fn model_document(&self, id: &str) -> Result<ModelDocument, ServiceError> {
        Ok(self.model(id)?.document.clone())
    }

    /// Rebuilds every journaled session found in `dir` and keeps
    /// journaling there. Models are restored under their recorded ids.
    pub fn recover(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        let state = AppState::with_journal(&dir);
        let mut max_model = 0;
        let mut max_session = 0;
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            max_session = max_session.max(numeric_suffix(&id));
            let session = state.replay(&id, &path)?;
            max_model = max_model.max(numeric_suffix(&session.request.model_id));
            state.sessions.write().expect("session table lock").insert(id, Arc::new(Mutex::new(session)));
        }
        state.next_model.store(max_model, Ordering::Relaxed);
        state.next_session.store(max_session, Ordering::Relaxed);
        Ok(state)
    }

    fn replay(&self, id: &str, path: &Path) -> Result<Session, ServiceError> {
        let corrupt = |msg: String| ServiceError::Journal(std::io::Error::new(std::io::ErrorKind::InvalidData, msg));
        let mut session: Option<Session> = None;
        for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: JournalEvent =
                serde_json::from_str(&line).map_err(|e| corrupt(format!("{}:{}: {e}", path.display(), n + 1)))?;
            match (event, &mut session) {
                (JournalEvent::Open { model_id, request, model }, None) => {
                    let stored = match self.model(&model_id) {
                        Ok(s) => s,
                        Err(_) => {
                            let m = model.to_model().map_err(|e| corrupt(e.to_string()))?;
                            self.insert_model(model_id.clone(), model, m);
                            self.model(&model_id)?
                        }
                    };
                    session = Some(Session::open(id.to_string(), request, stored.model.clone(), None)?);
                }
                (JournalEvent::Measurement { observation }, Some(s)) => s.measure(observation.into())?,
                _ => return Err(corrupt(format!("{}:{}: unexpected event", path.display(), n + 1))),
            }
        }
        let mut session = session.ok_or_else(|| corrupt(format!("{}: empty journal", path.display())))?;
        session.journal = Some(OpenOptions::new().append(true).open(path)?);
        Ok(session)
    }
}

fn numeric_suffix(id: &str) -> u64 {
    id.get(1..).and_then(|s| s.parse().ok()).unwrap_or(0)
}

type Shared = Arc<AppState>;

async fn post_model(
    State(state): State<Shared>,
    body: Result<Json<ModelDocument>, JsonRejection>,
) -> Result<(StatusCode, Json<ModelCreated>), ServiceError> {
    let Json(doc) = body?;
    let model_id = state.add_model(doc)?;
    Ok((StatusCode::CREATED, Json(ModelCreated { model_id })))
}

async fn get_model(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<ModelDocument>, ServiceError> {
    state.model_document(&id).map(Json)
}

async fn post_session(
    State(state): State<Shared>,
    body: Result<Json<OpenSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ServiceError> {
    let Json(request) = body?;
    let view = tokio::task::spawn_blocking(move || state.open_session(request)).await.expect("session task")?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn post_measurement(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<ObservationDoc>, JsonRejection>,
) -> Result<Json<SessionView>, ServiceError> {
    let Json(obs) = body?;
    tokio::task::spawn_blocking(move || state.measure(&id, obs.into())).await.expect("measurement task").map(Json)
}

async fn get_session(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ServiceError> {
    state.view(&id).map(Json)
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/models", post(post_model))
        .route("/models/{id}", get(get_model))
        .route("/sessions", post(post_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/measurements", post(post_measurement))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

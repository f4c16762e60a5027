use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::service::{DisplayPayload, SessionService, SlotView, SpeedDecision};
use super::{ConfidenceReport, ExperimentSession, NewTrial, Phase, SessionKey, Speed, Trial};
use crate::error::Error;
use crate::model::{normative_from_json, participant_from_json, read_normative, read_participant, NormativeModel};
use crate::synthesis::ViewingAngle;

#[derive(Clone)]
pub struct AppState {
    service: Arc<Mutex<SessionService>>,
    default_normative: Option<Arc<NormativeModel>>,
}

impl AppState {
    pub fn new(service: SessionService) -> Self {
        AppState {
            service: Arc::new(Mutex::new(service)),
            default_normative: None,
        }
    }

    /// Normative model used when an evaluation request does not name one.
    pub fn with_normative(mut self, nm: NormativeModel) -> Self {
        self.default_normative = Some(Arc::new(nm));
        self
    }

    pub fn service(&self) -> MutexGuard<'_, SessionService> {
        self.service.lock().unwrap_or_else(|p| p.into_inner())
    }
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            Error::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::Protocol(_) => (StatusCode::CONFLICT, "protocol"),
            Error::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
        };
        let body = ErrorBody {
            error: kind,
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

/// Operator-facing session view. Slider geometry stays server side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionStatus {
    pub session_id: String,
    pub phase: Phase,
    pub treadmill_speed: Speed,
    pub trials: Vec<Trial>,
    pub speed_decisions: Vec<SpeedDecision>,
    pub selections_recorded: usize,
}

impl From<&ExperimentSession> for SessionStatus {
    fn from(s: &ExperimentSession) -> Self {
        SessionStatus {
            session_id: s.id(),
            phase: s.phase,
            treadmill_speed: s.treadmill_speed,
            trials: s.trials.clone(),
            speed_decisions: s.speed_decisions.clone(),
            selections_recorded: s.evaluation.as_ref().map_or(0, |e| e.selections.len()),
        }
    }
}

#[derive(Deserialize)]
struct CreateSession {
    participant_id: String,
    day: u8,
    session_index: u8,
}

#[derive(Deserialize)]
struct SpeedRequest {
    direction: i8,
}

#[derive(Deserialize, Default)]
struct BeginEvaluation {
    seed: Option<u64>,
    participant_model: Option<serde_json::Value>,
    participant_model_path: Option<String>,
    normative_model: Option<serde_json::Value>,
    normative_model_path: Option<String>,
}

#[derive(Deserialize)]
struct FramesQuery {
    pos: f64,
    view: Option<ViewingAngle>,
}

#[derive(Deserialize)]
struct SelectionBody {
    pos: f64,
    timestamp_ms: Option<u64>,
}

/// Acknowledgement sent back to the display after a selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionAck {
    pub slot_id: String,
    pub phase: Phase,
    pub remaining_slots: usize,
    pub next_slot: Option<SlotView>,
}

fn key(id: &str) -> Result<SessionKey, ApiError> {
    id.parse().map_err(|_| ApiError(Error::NotFound(format!("session {id}"))))
}

async fn create_session(State(st): State<AppState>, Json(b): Json<CreateSession>) -> ApiResult<SessionStatus> {
    let mut svc = st.service();
    let s = svc.create_session(&b.participant_id, b.day, b.session_index)?;
    Ok(Json(s.into()))
}

async fn record_trial(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Json(t): Json<NewTrial>,
) -> ApiResult<SessionStatus> {
    let k = key(&id)?;
    let mut svc = st.service();
    Ok(Json(svc.record_trial(&k, t)?.into()))
}

async fn speed_request(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Json(b): Json<SpeedRequest>,
) -> ApiResult<SpeedDecision> {
    let k = key(&id)?;
    Ok(Json(st.service().request_speed_change(&k, b.direction)?))
}

async fn begin_evaluation(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<BeginEvaluation>>,
) -> ApiResult<Vec<SlotView>> {
    let k = key(&id)?;
    let b = body.map(|Json(b)| b).unwrap_or_default();
    let pm = match (b.participant_model, b.participant_model_path) {
        (Some(v), _) => participant_from_json(&v.to_string())?,
        (None, Some(p)) => read_participant(p)?,
        (None, None) => return Err(Error::protocol("models missing: no participant model given").into()),
    };
    let nm = match (b.normative_model, b.normative_model_path, &st.default_normative) {
        (Some(v), _, _) => normative_from_json(&v.to_string())?,
        (None, Some(p), _) => read_normative(p)?,
        (None, None, Some(nm)) => (**nm).clone(),
        (None, None, None) => return Err(Error::protocol("models missing: no normative model given").into()),
    };
    Ok(Json(st.service().begin_evaluation(&k, &pm, &nm, b.seed)?))
}

async fn slots(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<SlotView>> {
    let k = key(&id)?;
    Ok(Json(st.service().slots(&k)?))
}

async fn frames(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FramesQuery>,
) -> ApiResult<DisplayPayload> {
    Ok(Json(st.service().frames(&id, q.pos, q.view)?))
}

async fn selection(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Json(b): Json<SelectionBody>,
) -> ApiResult<SelectionAck> {
    let ts = b.timestamp_ms.unwrap_or_else(|| {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    });
    let mut svc = st.service();
    let s = svc.record_selection_at(&id, b.pos, ts)?;
    let (phase, k) = (s.phase, s.key.clone());
    let slots = svc.slots(&k)?;
    let open: Vec<SlotView> = slots.into_iter().filter(|s| s.open).collect();
    Ok(Json(SelectionAck {
        slot_id: id,
        phase,
        remaining_slots: open.len(),
        next_slot: open.into_iter().next(),
    }))
}

async fn confidence(
    State(st): State<AppState>,
    Path(pid): Path<String>,
    Json(mut r): Json<ConfidenceReport>,
) -> Result<StatusCode, ApiError> {
    r.participant_id = pid;
    st.service().record_confidence(r)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn report(State(st): State<AppState>, Path(pid): Path<String>) -> ApiResult<super::ReportBundle> {
    Ok(Json(st.service().export_report(&pid)?))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/trials", post(record_trial))
        .route("/sessions/{id}/speed-request", post(speed_request))
        .route("/sessions/{id}/evaluation", post(begin_evaluation))
        .route("/sessions/{id}/slots", get(slots))
        .route("/slots/{id}/frames", get(frames))
        .route("/slots/{id}/selection", post(selection))
        .route("/participants/{id}/confidence", post(confidence))
        .route("/participants/{id}/report", get(report))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

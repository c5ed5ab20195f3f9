//! HTTP+JSON routes. Mutations go through [`SimService`]; queries read the
//! last published snapshot.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;

use alertbed::codec::{Coding, WarningPayload};
use alertbed::control::{presets, PresetMode, SubscriberEntry, SubscriberError};
use alertbed::radio::{CellConfig, CellPatch, Pci, RadioError, UeId, WarningId};
use alertbed::sim::{Ack, ScenarioError, SimError, UeSpec};
use alertbed::verify::VerificationPolicy;
use alertbed::{Command, Scenario, SimEvent};
use axum::body::Bytes;
use axum::extract::{FromRef, FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use futures::Stream;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::service::{Published, ServiceError, SimService};

const DEFAULT_STEP_MS: u64 = 100;
const MAX_EVENTS_PER_PAGE: usize = 10_000;

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    /// Machine-readable error name, e.g. `MessageTooLong`.
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            error: error.into(),
            message: message.into(),
            path: None,
            line: None,
            column: None,
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", what)
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidRequest", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

/// The leading identifier of a `Debug` rendering, i.e. the variant name.
fn variant_name(debug: String) -> String {
    debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}

pub fn classify(e: &SimError) -> (StatusCode, String) {
    use StatusCode as S;
    let status = match e {
        SimError::UnknownUe(_)
        | SimError::UnknownAlert { .. }
        | SimError::Radio(RadioError::UnknownCell(_) | RadioError::UnknownWarning(_))
        | SimError::Subscriber(SubscriberError::Unknown(_)) => S::NOT_FOUND,
        SimError::DuplicateUe(_)
        | SimError::TimeInPast { .. }
        | SimError::Radio(
            RadioError::DuplicatePci(_) | RadioError::TooManySiMessages { .. } | RadioError::CellInactive(_),
        )
        | SimError::Subscriber(SubscriberError::Duplicate(_)) => S::CONFLICT,
        _ => S::UNPROCESSABLE_ENTITY,
    };
    let name = match e {
        SimError::Radio(RadioError::Codec(c)) => variant_name(format!("{c:?}")),
        SimError::Radio(r) => variant_name(format!("{r:?}")),
        SimError::Ue(u) => variant_name(format!("{u:?}")),
        SimError::Verify(v) => variant_name(format!("{v:?}")),
        SimError::Subscriber(s) => variant_name(format!("{s:?}")),
        other => variant_name(format!("{other:?}")),
    };
    (status, name)
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        match &e {
            ServiceError::Sim(sim) => {
                let (status, name) = classify(sim);
                Self::new(status, &name, e.to_string())
            }
            ServiceError::Stopped => Self::new(StatusCode::SERVICE_UNAVAILABLE, "Stopped", e.to_string()),
        }
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        let mut err = Self::new(StatusCode::UNPROCESSABLE_ENTITY, "BadScenario", e.to_string());
        if let ScenarioError::Parse { path, line, column, .. } = e {
            err.path = Some(path);
            err.line = Some(line);
            err.column = Some(column);
        }
        err
    }
}

/// JSON body whose deserialization errors become 422 responses naming the
/// offending field.
pub struct Valid<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Valid<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::invalid(e.to_string()))?;
        let body: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { &bytes };
        let de = &mut serde_json::Deserializer::from_slice(body);
        serde_path_to_error::deserialize(de).map(Valid).map_err(|e| {
            let mut err = ApiError::invalid(e.inner().to_string());
            err.path = Some(e.path().to_string());
            err.line = Some(e.inner().line());
            err.column = Some(e.inner().column());
            err
        })
    }
}

#[derive(Clone)]
pub struct AppState {
    pub service: SimService,
    /// The scenario file the server was started with, where the subscriber
    /// store is saved on request.
    pub scenario_file: Option<Arc<PathBuf>>,
}

impl FromRef<AppState> for SimService {
    fn from_ref(state: &AppState) -> Self {
        state.service.clone()
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok(body: Value) -> ApiResult {
    Ok(Json(body).into_response())
}

fn created(body: Value) -> ApiResult {
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

/// Optional `?at_ms=` on every mutation schedules it for a later simulated
/// time.
#[derive(Debug, Default, Deserialize)]
pub struct At {
    at_ms: Option<u64>,
}

fn cell_json(p: &Published, pci: Pci) -> Option<Value> {
    p.snapshot.cells.iter().find(|c| c.config.pci == pci).map(|c| json!(c))
}

fn warnings_json(p: &Published, ids: &[WarningId]) -> Value {
    json!(p.snapshot.warnings.iter().filter(|w| ids.contains(&w.id)).collect::<Vec<_>>())
}

/// The final event of an immediate command, when it has type `kind`.
fn last_event(svc: &SimService, ack: &Ack, p: &Published, kind: &str) -> Option<SimEvent> {
    if ack.scheduled {
        return None;
    }
    svc.events()
        .since(p.cursor.saturating_sub(1), 1)
        .into_iter()
        .find(|e| e.event_type == kind)
}

async fn submit(svc: &SimService, cmd: Command, at: At) -> Result<(Ack, Arc<Published>), ApiError> {
    Ok(svc.submit(cmd, at.at_ms).await?)
}

// ---- cells ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewCell {
    config: CellConfig,
    #[serde(default)]
    initial_power: BTreeMap<UeId, f64>,
}

async fn list_cells(State(svc): State<SimService>) -> ApiResult {
    ok(json!(svc.published().snapshot.cells))
}

async fn get_cell(State(svc): State<SimService>, Path(pci): Path<Pci>) -> ApiResult {
    cell_json(&svc.published(), pci).map_or_else(|| Err(ApiError::not_found(format!("cell {pci}"))), ok)
}

async fn add_cell(State(svc): State<SimService>, Query(at): Query<At>, Valid(body): Valid<NewCell>) -> ApiResult {
    let pci = body.config.pci;
    let cmd = Command::AddCell {
        config: body.config,
        initial_power: body.initial_power,
    };
    let (ack, p) = submit(&svc, cmd, at).await?;
    created(json!({"ack": ack, "cell": cell_json(&p, pci)}))
}

async fn update_cell(
    State(svc): State<SimService>,
    Path(pci): Path<Pci>,
    Query(at): Query<At>,
    Valid(patch): Valid<CellPatch>,
) -> ApiResult {
    let (ack, p) = submit(&svc, Command::UpdateCell { pci, patch }, at).await?;
    ok(json!({"ack": ack, "cell": cell_json(&p, pci)}))
}

async fn stop_cell(State(svc): State<SimService>, Path(pci): Path<Pci>, Query(at): Query<At>) -> ApiResult {
    let (ack, p) = submit(&svc, Command::StopCell { pci }, at).await?;
    ok(json!({"ack": ack, "cell": cell_json(&p, pci)}))
}

// ---- warnings ----

/// Warning fields as the console sends them. Without `coding` the text
/// decides between GSM7 and UCS2.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WarningBody {
    message_identifier: u16,
    serial_number: u16,
    #[serde(default)]
    coding: Option<Coding>,
    text: String,
    #[serde(default)]
    with_paging: bool,
}

impl WarningBody {
    fn payload(&self) -> WarningPayload {
        match self.coding {
            Some(coding) => WarningPayload::new(self.message_identifier, self.serial_number, coding, self.text.clone()),
            None => WarningPayload::auto(self.message_identifier, self.serial_number, self.text.clone()),
        }
    }
}

async fn start_warning(
    State(svc): State<SimService>,
    Path(pci): Path<Pci>,
    Query(at): Query<At>,
    Valid(body): Valid<WarningBody>,
) -> ApiResult {
    let cmd = Command::StartWarning {
        pci,
        payload: body.payload(),
        with_paging: body.with_paging,
    };
    let (ack, p) = submit(&svc, cmd, at).await?;
    created(json!({"warnings": warnings_json(&p, &ack.warning_ids), "ack": ack}))
}

async fn list_warnings(State(svc): State<SimService>) -> ApiResult {
    ok(json!(svc.published().snapshot.warnings))
}

async fn get_warning(State(svc): State<SimService>, Path(id): Path<WarningId>) -> ApiResult {
    let p = svc.published();
    match p.snapshot.warnings.iter().find(|w| w.id == id) {
        Some(w) => ok(json!(w)),
        None => Err(ApiError::not_found(format!("warning {id}"))),
    }
}

async fn update_warning(
    State(svc): State<SimService>,
    Path(id): Path<WarningId>,
    Query(at): Query<At>,
    Valid(body): Valid<WarningBody>,
) -> ApiResult {
    let cmd = Command::UpdateWarning {
        warning_id: id,
        payload: body.payload(),
    };
    let (ack, p) = submit(&svc, cmd, at).await?;
    ok(json!({"ack": ack, "warnings": warnings_json(&p, &[id])}))
}

async fn stop_warning(State(svc): State<SimService>, Path(id): Path<WarningId>, Query(at): Query<At>) -> ApiResult {
    let (ack, _) = submit(&svc, Command::StopWarning { warning_id: id }, at).await?;
    ok(json!({"ack": ack}))
}

// ---- presets ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplyPreset {
    pci: Pci,
    /// Apply to an existing warning instead of starting a new one.
    #[serde(default)]
    warning_id: Option<WarningId>,
    #[serde(default)]
    payload: Option<WarningPayload>,
    #[serde(default)]
    mode: Option<PresetMode>,
    #[serde(default)]
    with_paging: Option<bool>,
}

async fn list_presets() -> ApiResult {
    ok(json!(presets::builtin()))
}

async fn apply_preset(
    State(svc): State<SimService>,
    Path(name): Path<String>,
    Query(at): Query<At>,
    Valid(body): Valid<ApplyPreset>,
) -> ApiResult {
    let mut preset = presets::find(&name).ok_or_else(|| ApiError::not_found(format!("preset {name:?}")))?;
    if let Some(payload) = body.payload {
        preset.payload = payload;
    }
    if let Some(mode) = body.mode {
        preset.mode = mode;
    }
    if let Some(with_paging) = body.with_paging {
        preset.with_paging = with_paging;
    }
    let cmd = Command::ApplyPreset {
        preset,
        pci: body.pci,
        warning_id: body.warning_id,
    };
    let (ack, p) = submit(&svc, cmd, at).await?;
    let warnings = warnings_json(&p, &ack.warning_ids);
    let scheduled = last_event(&svc, &ack, &p, "PresetApplied").and_then(|e| e.get("scheduled").cloned());
    created(json!({"ack": ack, "warnings": warnings, "scheduled": scheduled}))
}

// ---- subscribers ----

async fn list_subscribers(State(svc): State<SimService>) -> ApiResult {
    ok(json!(svc.published().snapshot.subscribers))
}

fn subscriber_json(p: &Published, imsi: &str) -> Option<Value> {
    p.snapshot.subscribers.iter().find(|s| s.imsi == imsi).map(|s| json!(s))
}

async fn get_subscriber(State(svc): State<SimService>, Path(imsi): Path<String>) -> ApiResult {
    subscriber_json(&svc.published(), &imsi).map_or_else(|| Err(ApiError::not_found(format!("subscriber {imsi}"))), ok)
}

async fn add_subscriber(
    State(svc): State<SimService>,
    Query(at): Query<At>,
    Valid(entry): Valid<SubscriberEntry>,
) -> ApiResult {
    let imsi = entry.imsi.clone();
    let (ack, p) = submit(&svc, Command::AddSubscriber { entry }, at).await?;
    created(json!({"ack": ack, "subscriber": subscriber_json(&p, &imsi)}))
}

async fn update_subscriber(
    State(svc): State<SimService>,
    Path(imsi): Path<String>,
    Query(at): Query<At>,
    Valid(entry): Valid<SubscriberEntry>,
) -> ApiResult {
    if entry.imsi != imsi {
        let mut err = ApiError::invalid(format!("body IMSI {} does not match the path", entry.imsi));
        err.path = Some("imsi".into());
        return Err(err);
    }
    let (ack, p) = submit(&svc, Command::UpdateSubscriber { entry }, at).await?;
    ok(json!({"ack": ack, "subscriber": subscriber_json(&p, &imsi)}))
}

async fn remove_subscriber(State(svc): State<SimService>, Path(imsi): Path<String>, Query(at): Query<At>) -> ApiResult {
    let (ack, _) = submit(&svc, Command::RemoveSubscriber { imsi }, at).await?;
    ok(json!({"ack": ack}))
}

/// Write the current subscriber store into the scenario file's
/// `subscribers` field, leaving the rest of the file as it was.
async fn save_subscribers(State(state): State<AppState>) -> ApiResult {
    let Some(path) = state.scenario_file else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "NoScenarioFile",
            "the server was started without a scenario file",
        ));
    };
    let subscribers = state.service.published().snapshot.subscribers.clone();
    let io = |e: std::io::Error| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Io", e.to_string());
    let text = tokio::fs::read_to_string(path.as_ref()).await.map_err(io)?;
    let mut doc: Value = serde_json::from_str(&text).map_err(|e| ApiError::from(ScenarioError::Invalid(e.to_string())))?;
    let Some(obj) = doc.as_object_mut() else {
        return Err(ScenarioError::Invalid("scenario file is not a JSON object".into()).into());
    };
    obj.insert("subscribers".into(), json!(subscribers));
    let pretty = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    tokio::fs::write(path.as_ref(), pretty + "\n").await.map_err(io)?;
    ok(json!({"saved": subscribers.len(), "path": path.display().to_string()}))
}

// ---- radio ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Jam {
    ues: Vec<UeId>,
    duration_ms: u64,
}

async fn jam(State(svc): State<SimService>, Query(at): Query<At>, Valid(body): Valid<Jam>) -> ApiResult {
    let cmd = Command::Jam {
        ues: body.ues,
        duration_ms: body.duration_ms,
    };
    let (ack, _) = submit(&svc, cmd, at).await?;
    ok(json!({"ack": ack}))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RxPower {
    ue: UeId,
    pci: Pci,
    dbm: Option<f64>,
}

async fn set_rx_power(State(svc): State<SimService>, Query(at): Query<At>, Valid(body): Valid<RxPower>) -> ApiResult {
    let cmd = Command::SetRxPower {
        ue: body.ue,
        pci: body.pci,
        dbm: body.dbm,
    };
    let (ack, _) = submit(&svc, cmd, at).await?;
    ok(json!({"ack": ack}))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Threshold {
    dbm: f64,
}

async fn set_threshold(State(svc): State<SimService>, Query(at): Query<At>, Valid(body): Valid<Threshold>) -> ApiResult {
    let (ack, _) = submit(&svc, Command::SetDetectionThreshold { dbm: body.dbm }, at).await?;
    ok(json!({"ack": ack}))
}

async fn set_policy(
    State(svc): State<SimService>,
    Query(at): Query<At>,
    Valid(policy): Valid<VerificationPolicy>,
) -> ApiResult {
    let (ack, p) = submit(&svc, Command::SetVerificationPolicy { policy }, at).await?;
    ok(json!({"ack": ack, "verification_policy": p.snapshot.verification_policy}))
}

// ---- UEs ----

fn ue_known(p: &Published, id: UeId) -> Result<(), ApiError> {
    if p.snapshot.ues.iter().any(|u| u.id == id) {
        Ok(())
    } else {
        Err(ApiError::not_found(format!("UE {id}")))
    }
}

async fn list_ues(State(svc): State<SimService>) -> ApiResult {
    ok(json!(svc.published().snapshot.ues))
}

async fn add_ue(State(svc): State<SimService>, Query(at): Query<At>, Valid(ue): Valid<UeSpec>) -> ApiResult {
    let id = ue.id;
    let (ack, p) = submit(&svc, Command::AddUe { ue }, at).await?;
    let ue = p.snapshot.ues.iter().find(|u| u.id == id);
    created(json!({"ack": ack, "ue": ue}))
}

async fn get_ue(State(svc): State<SimService>, Path(id): Path<UeId>) -> ApiResult {
    let p = svc.published();
    ue_known(&p, id)?;
    ok(json!(p.snapshot.ues.iter().find(|u| u.id == id)))
}

async fn ue_alerts(State(svc): State<SimService>, Path(id): Path<UeId>) -> ApiResult {
    let p = svc.published();
    ue_known(&p, id)?;
    ok(json!(p.snapshot.alerts.get(&id).cloned().unwrap_or_default()))
}

async fn ue_verdicts(State(svc): State<SimService>, Path(id): Path<UeId>) -> ApiResult {
    let p = svc.published();
    ue_known(&p, id)?;
    ok(json!(p.snapshot.verdicts.get(&id).cloned().unwrap_or_default()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Tap {
    span_index: usize,
}

async fn interact(
    State(svc): State<SimService>,
    Path((ue, alert_index)): Path<(UeId, usize)>,
    Query(at): Query<At>,
    Valid(body): Valid<Tap>,
) -> ApiResult {
    let cmd = Command::Interact {
        ue,
        alert_index,
        span_index: body.span_index,
    };
    let (ack, p) = submit(&svc, cmd, at).await?;
    let trace = last_event(&svc, &ack, &p, "AlertInteraction").and_then(|e| e.get("trace").cloned());
    ok(json!({"ack": ack, "trace": trace}))
}

// ---- events ----

#[derive(Deserialize)]
struct Since {
    #[serde(default)]
    since: u64,
    #[serde(default)]
    limit: Option<usize>,
}

async fn events(State(svc): State<SimService>, Query(q): Query<Since>) -> ApiResult {
    let limit = q.limit.unwrap_or(MAX_EVENTS_PER_PAGE).min(MAX_EVENTS_PER_PAGE);
    let events = svc.events().since(q.since, limit);
    let cursor = events.last().map_or(q.since, |e| e.seq);
    ok(json!({"events": events, "cursor": cursor}))
}

/// Server-sent events from `since` onwards; each event's id is its `seq`,
/// so a reconnecting client resumes with `Last-Event-ID` semantics.
async fn event_stream(
    State(svc): State<SimService>,
    Query(q): Query<Since>,
    headers: axum::http::HeaderMap,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let resume = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse().ok());
    let cursor = resume.unwrap_or(q.since);
    let updates = svc.events().subscribe();
    let stream = futures::stream::unfold((svc, cursor, updates), |(svc, mut cursor, mut updates)| async move {
        loop {
            let batch = svc.events().since(cursor, MAX_EVENTS_PER_PAGE);
            if !batch.is_empty() {
                cursor = batch.last().map_or(cursor, |e| e.seq);
                let events: Vec<Result<Event, Infallible>> = batch
                    .iter()
                    .map(|e| Ok(Event::default().id(e.seq.to_string()).event("sim").data(e.to_json_line())))
                    .collect();
                return Some((futures::stream::iter(events), (svc, cursor, updates)));
            }
            if updates.changed().await.is_err() {
                return None;
            }
        }
    });
    Sse::new(futures::StreamExt::flatten(stream)).keep_alive(KeepAlive::default())
}

// ---- simulation control ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Step {
    #[serde(default)]
    ms: Option<u64>,
}

async fn step(State(svc): State<SimService>, Valid(body): Valid<Step>) -> ApiResult {
    let (ack, p) = svc.step(body.ms.unwrap_or(DEFAULT_STEP_MS)).await?;
    ok(json!({"ack": ack, "now_ms": p.snapshot.now_ms, "cursor": p.cursor}))
}

/// Exactly one of the fields selects the mode.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Run {
    #[serde(default)]
    until_ms: Option<u64>,
    #[serde(default)]
    duration_ms: Option<u64>,
    /// Start free-running at this multiple of wall-clock speed.
    #[serde(default)]
    realtime_ratio: Option<f64>,
    #[serde(default)]
    pause: bool,
}

async fn run(State(svc): State<SimService>, Valid(body): Valid<Run>) -> ApiResult {
    let chosen = [
        body.until_ms.is_some(),
        body.duration_ms.is_some(),
        body.realtime_ratio.is_some(),
        body.pause,
    ];
    if chosen.iter().filter(|&&c| c).count() != 1 {
        return Err(ApiError::invalid(
            "give exactly one of until_ms, duration_ms, realtime_ratio or pause",
        ));
    }
    let (ack, p) = match (body.until_ms, body.duration_ms, body.realtime_ratio) {
        (Some(until_ms), _, _) => svc.submit(Command::Run { until_ms }, None).await?,
        (_, Some(ms), _) => svc.step(ms).await?,
        (_, _, Some(ratio)) if ratio > 0.0 && ratio.is_finite() => svc.free_run(Some(ratio)).await?,
        (_, _, Some(_)) => return Err(ApiError::invalid("realtime_ratio must be positive")),
        _ => svc.free_run(None).await?,
    };
    ok(json!({"ack": ack, "now_ms": p.snapshot.now_ms, "cursor": p.cursor, "free_run_ratio": p.free_run_ratio}))
}

async fn reset(State(svc): State<SimService>) -> ApiResult {
    let (ack, p) = svc.submit(Command::Reset, None).await?;
    ok(json!({"ack": ack, "now_ms": p.snapshot.now_ms}))
}

async fn load_scenario(State(svc): State<SimService>, body: Bytes) -> ApiResult {
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::invalid(e.to_string()))?;
    let scenario = Scenario::from_json(text)?;
    let name = scenario.name.clone();
    let (ack, p) = svc.load(scenario).await?;
    ok(json!({"ack": ack, "scenario": name, "cells": p.snapshot.cells.len(), "ues": p.snapshot.ues.len()}))
}

async fn status(State(svc): State<SimService>) -> ApiResult {
    let p = svc.published();
    ok(json!({"now_ms": p.snapshot.now_ms, "cursor": p.cursor, "free_run_ratio": p.free_run_ratio}))
}

async fn snapshot(State(svc): State<SimService>) -> ApiResult {
    ok(json!(svc.published().snapshot))
}

async fn unknown_route() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(service: SimService, scenario_file: Option<PathBuf>) -> Router {
    Router::new()
        .route("/api/status", get(status))
        .route("/api/snapshot", get(snapshot))
        .route("/api/cells", get(list_cells).post(add_cell))
        .route("/api/cells/{pci}", get(get_cell).patch(update_cell).delete(stop_cell))
        .route("/api/cells/{pci}/warnings", post(start_warning))
        .route("/api/warnings", get(list_warnings))
        .route("/api/warnings/{id}", get(get_warning).patch(update_warning).delete(stop_warning))
        .route("/api/presets", get(list_presets))
        .route("/api/presets/{name}/apply", post(apply_preset))
        .route("/api/subscribers", get(list_subscribers).post(add_subscriber))
        .route("/api/subscribers/save", post(save_subscribers))
        .route(
            "/api/subscribers/{imsi}",
            get(get_subscriber).put(update_subscriber).delete(remove_subscriber),
        )
        .route("/api/jam", post(jam))
        .route("/api/topology/rx_power", post(set_rx_power))
        .route("/api/topology/threshold", post(set_threshold))
        .route("/api/verification_policy", patch(set_policy).put(set_policy))
        .route("/api/ues", get(list_ues).post(add_ue))
        .route("/api/ues/{id}", get(get_ue))
        .route("/api/ues/{id}/alerts", get(ue_alerts))
        .route("/api/ues/{id}/alerts/{index}/interact", post(interact))
        .route("/api/ues/{id}/verdicts", get(ue_verdicts))
        .route("/api/events", get(events))
        .route("/api/events/stream", get(event_stream))
        .route("/api/sim/step", post(step))
        .route("/api/sim/run", post(run))
        .route("/api/sim/reset", post(reset))
        .route("/api/scenario/load", post(load_scenario))
        .fallback(unknown_route)
        .with_state(AppState {
            service,
            scenario_file: scenario_file.map(Arc::new),
        })
}

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use dca_core::analytics::{assemble_stats, read_defects, read_effort, read_units, SystematicError};
use dca_core::bn::serialize_network;
use dca_core::learn::Provenance;
use dca_core::model::{compile, parse_model, read_citations, records_to_assignments};
use dca_core::session::{
    contribute_and_retrain, generate_report, train_version, ActionStatus, CauseRef, Session, Step,
};

use crate::description::api_description;
use crate::error::ApiError;
use crate::jobs::{JobKind, Jobs, TrainingOptions};
use crate::ops;
use crate::store::{Store, SCHEMA_VERSION};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub jobs: Jobs,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        Self {
            store: Arc::new(store),
            jobs: Jobs::default(),
        }
    }
}

type ApiResult = Result<Response, ApiError>;
type Q = Query<HashMap<String, String>>;

fn ok<T: Serialize>(value: T) -> ApiResult {
    Ok(Json(value).into_response())
}

fn created<T: Serialize>(value: T) -> ApiResult {
    Ok((StatusCode::CREATED, Json(value)).into_response())
}

fn accepted<T: Serialize>(value: T) -> ApiResult {
    Ok((StatusCode::ACCEPTED, Json(value)).into_response())
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes)
        .map_err(|e| ApiError::new("invalid-body", format!("request body: {e}")))
}

fn text(bytes: &Bytes) -> Result<&str, ApiError> {
    std::str::from_utf8(bytes)
        .map_err(|_| ApiError::new("invalid-body", "request body is not UTF-8"))
}

fn query_usize(q: &HashMap<String, String>, key: &str) -> Result<Option<u64>, ApiError> {
    q.get(key)
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| ApiError::bad_request(format!("{key} must be a nonnegative integer")))
        })
        .transpose()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api", get(description))
        .route("/.well-known/dca-api.json", get(description))
        .route("/api/health", get(health))
        .route("/api/models", post(upload_model).get(list_models))
        .route("/api/models/validate", post(validate_model))
        .route("/api/models/compile", post(compile_model))
        .route("/api/models/{id}", get(get_model))
        .route("/api/training", post(start_training))
        .route("/api/training/{id}", get(get_job))
        .route("/api/versions", get(list_versions))
        .route("/api/versions/{id}", get(get_version))
        .route("/api/versions/{id}/trace", get(get_trace))
        .route("/api/versions/{id}/network", get(get_network))
        .route("/api/versions/{id}/diagnose", post(diagnose_version))
        .route("/api/versions/{id}/retrain", post(start_retrain))
        .route("/api/sessions", post(create_session).get(list_sessions))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/advance", post(advance))
        .route("/api/sessions/{id}/sample", post(set_sample))
        .route("/api/sessions/{id}/classify", post(classify))
        .route(
            "/api/sessions/{id}/systematic-errors",
            post(add_systematic_error),
        )
        .route(
            "/api/sessions/{id}/systematic-errors/{error_id}",
            delete(remove_systematic_error),
        )
        .route("/api/sessions/{id}/diagnose", post(session_diagnose))
        .route("/api/sessions/{id}/ledger", get(ledger))
        .route("/api/sessions/{id}/causes", post(record_cause))
        .route("/api/sessions/{id}/actions", post(propose_action))
        .route(
            "/api/sessions/{id}/actions/{action_id}/status",
            post(set_action_status),
        )
        .route("/api/sessions/{id}/report", post(document).get(get_report))
        .route("/api/defects", post(upload_defects).get(list_defects))
        .route("/api/defects/{id}/tag", post(tag_defect))
        .route(
            "/api/iterations",
            post(upload_iterations).get(list_iterations),
        )
        .route("/api/analytics/pareto", get(analytics_pareto))
        .route("/api/analytics/uchart", get(analytics_uchart))
        .route("/api/analytics/density", get(analytics_density))
        .route("/api/analytics/efficiency", get(analytics_efficiency))
        .route("/api/analytics/details", get(analytics_details))
        .fallback(|| async { ApiError::new("no-route", "no such route") })
        .with_state(state)
}

async fn description() -> Json<Value> {
    Json(api_description())
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "schema_version": SCHEMA_VERSION }))
}

// Models.

async fn upload_model(State(s): State<AppState>, bytes: Bytes) -> ApiResult {
    let model = parse_model(text(&bytes)?)?;
    let issues = model.issues();
    if let Some(first) = issues.first() {
        let detail: Vec<Value> = issues
            .iter()
            .map(|i| json!({"code": i.code(), "message": i.to_string()}))
            .collect();
        return Err(
            ApiError::new(first.code(), first.to_string()).with_detail(json!({ "issues": detail }))
        );
    }
    created(s.store.put_model(model)?)
}

async fn list_models(State(s): State<AppState>) -> ApiResult {
    let models: Vec<Value> = s
        .store
        .models()
        .into_iter()
        .map(|m| json!({"id": m.id, "created_at": m.created_at, "version": m.model.version}))
        .collect();
    ok(models)
}

async fn get_model(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    ok(s.store.model(&id)?)
}

async fn validate_model(bytes: Bytes) -> ApiResult {
    let model = match parse_model(text(&bytes)?) {
        Ok(m) => m,
        Err(e) => {
            return ok(json!({
                "valid": false,
                "issues": [{"code": e.code(), "message": e.to_string()}],
                "warnings": [],
            }))
        }
    };
    let issues: Vec<Value> = model
        .issues()
        .iter()
        .map(|i| json!({"code": i.code(), "message": i.to_string()}))
        .collect();
    ok(json!({ "valid": issues.is_empty(), "issues": issues, "warnings": model.warnings() }))
}

async fn compile_model(bytes: Bytes) -> ApiResult {
    let model = parse_model(text(&bytes)?)?;
    let compiled = compile(&model)?;
    let network: Value =
        serde_json::from_str(&serialize_network(&compiled.network)).expect("network document");
    ok(json!({
        "network": network,
        "node_map": compiled.node_map,
        "parameters": compiled.parameters,
        "warnings": compiled.warnings,
    }))
}

// Training and versions.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainRequest {
    model_id: String,
    citations_csv: String,
    #[serde(default)]
    options: TrainingOptions,
}

async fn start_training(State(s): State<AppState>, bytes: Bytes) -> ApiResult {
    let req: TrainRequest = body(&bytes)?;
    let model = s.store.model(&req.model_id)?.model;
    let config = req.options.to_config()?;
    let citations = read_citations(
        &model,
        req.citations_csv.as_bytes(),
        Provenance::CrossCompany,
    )?;
    let compiled = compile(&model)?;
    let records = records_to_assignments(&model, &compiled, &citations)?;
    let store = s.store.clone();
    let job = s.jobs.spawn(JobKind::Train, move || {
        let version = train_version(&model, &records, &config, None)?;
        Ok(store.put_version(version, &records)?.id)
    });
    accepted(job)
}

async fn get_job(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    ok(s.jobs
        .get(&id)
        .ok_or_else(|| ApiError::not_found("job", &id))?)
}

fn version_summary(v: &dca_core::session::ModelVersion) -> Value {
    json!({
        "id": v.id,
        "parent": v.parent,
        "created_at": v.created_at,
        "model_version": v.model.version,
        "record_count": v.record_count,
        "records_fingerprint": v.records_fingerprint,
        "final_log_likelihood": v.learn.final_log_likelihood,
        "iterations": v.learn.iterations,
        "converged": v.learn.converged,
        "best_seed": v.learn.best_seed,
    })
}

async fn list_versions(State(s): State<AppState>) -> ApiResult {
    ok(s.store
        .versions()
        .iter()
        .map(version_summary)
        .collect::<Vec<_>>())
}

async fn get_version(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    ok(s.store.version(&id)?)
}

async fn get_trace(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let v = s.store.version(&id)?;
    ok(json!({
        "version_id": v.id,
        "loglik_trace": v.learn.loglik_trace,
        "final_log_likelihood": v.learn.final_log_likelihood,
        "iterations": v.learn.iterations,
        "converged": v.learn.converged,
        "seed_log_likelihoods": v.learn.seed_log_likelihoods,
    }))
}

async fn get_network(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let v = s.store.version(&id)?;
    let network: Value =
        serde_json::from_str(&serialize_network(&v.network)).expect("network document");
    ok(network)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagnoseRequest {
    problem_id: String,
    #[serde(default)]
    evidence: BTreeMap<String, String>,
}

impl DiagnoseRequest {
    fn evidence(&self) -> Result<dca_core::bn::EvidenceSet, ApiError> {
        let pairs: Vec<String> = self
            .evidence
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        ops::parse_evidence(&pairs)
    }
}

async fn diagnose_version(
    State(s): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: DiagnoseRequest = body(&bytes)?;
    let version = s.store.version(&id)?;
    ok(ops::diagnose_version(
        &version,
        &req.problem_id,
        &req.evidence()?,
    )?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RetrainRequest {
    session_ids: Vec<String>,
    #[serde(default)]
    options: TrainingOptions,
}

async fn start_retrain(
    State(s): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: RetrainRequest = body(&bytes)?;
    let parent = s.store.version(&id)?;
    let records = s.store.record_set(&parent.records_fingerprint)?;
    let sessions: Vec<Session> = req
        .session_ids
        .iter()
        .map(|sid| s.store.session(sid))
        .collect::<Result<_, _>>()?;
    let config = req.options.to_config()?;
    dca_core::session::session_citations(&parent, &sessions.iter().collect::<Vec<_>>())?;
    let store = s.store.clone();
    let job = s.jobs.spawn(JobKind::Retrain, move || {
        let refs: Vec<&Session> = sessions.iter().collect();
        let (child, child_records) = contribute_and_retrain(&parent, &records, &refs, &config)?;
        Ok(store.put_version(child, &child_records)?.id)
    });
    accepted(job)
}

// Sessions.

#[derive(Serialize)]
struct Mutation<T: Serialize> {
    session: Session,
    result: T,
}

fn mutated<T: Serialize>(session: Session, result: T) -> ApiResult {
    ok(Mutation { session, result })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    model_version_id: String,
}

async fn create_session(State(s): State<AppState>, bytes: Bytes) -> ApiResult {
    let req: CreateSession = body(&bytes)?;
    created(s.store.create_session(&req.model_version_id)?)
}

async fn list_sessions(State(s): State<AppState>) -> ApiResult {
    let sessions: Vec<Value> = s
        .store
        .sessions()
        .into_iter()
        .map(|x| {
            json!({
                "id": x.id,
                "created_at": x.created_at,
                "model_version_id": x.model_version_id,
                "step": x.step,
                "revision": x.revision,
            })
        })
        .collect();
    ok(sessions)
}

async fn get_session(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    ok(s.store.session(&id)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdvanceRequest {
    revision: u64,
    to: Step,
}

async fn advance(State(s): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: AdvanceRequest = body(&bytes)?;
    let (session, ()) = s
        .store
        .update_session(&id, req.revision, |x| x.advance(req.to))?;
    mutated(session, ())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRequest {
    revision: u64,
    defect_ids: BTreeSet<String>,
}

async fn set_sample(State(s): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: SampleRequest = body(&bytes)?;
    let defects = s.store.defects().defects;
    let (session, ()) = s.store.update_session(&id, req.revision, |x| {
        x.set_sample(req.defect_ids, &defects)
    })?;
    mutated(session, ())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RevisionOnly {
    revision: u64,
}

async fn classify(State(s): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: RevisionOnly = body(&bytes)?;
    let defects = s.store.defects().defects;
    let stats = s.store.stats();
    let (session, c) = s
        .store
        .update_session(&id, req.revision, |x| x.classify(&defects, &stats).cloned())?;
    mutated(session, c)
}

#[derive(Deserialize)]
struct SystematicErrorRequest {
    revision: u64,
    #[serde(flatten)]
    error: SystematicError,
}

async fn add_systematic_error(
    State(s): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: SystematicErrorRequest = body(&bytes)?;
    let defects = s.store.defects().defects;
    let (session, warnings) = s.store.update_session(&id, req.revision, |x| {
        x.add_systematic_error(req.error, &defects)
    })?;
    mutated(session, json!({ "warnings": warnings }))
}

async fn remove_systematic_error(
    State(s): State<AppState>,
    Path((id, error_id)): Path<(String, String)>,
    q: Q,
) -> ApiResult {
    let revision = query_usize(&q, "revision")?
        .ok_or_else(|| ApiError::bad_request("revision is required"))?;
    let (session, ()) = s
        .store
        .update_session(&id, revision, |x| x.remove_systematic_error(&error_id))?;
    mutated(session, ())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionDiagnoseRequest {
    revision: u64,
    problem_id: String,
    #[serde(default)]
    evidence: BTreeMap<String, String>,
}

async fn session_diagnose(
    State(s): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: SessionDiagnoseRequest = body(&bytes)?;
    let pairs: Vec<String> = req
        .evidence
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    let evidence = ops::parse_evidence(&pairs)?;
    let session = s.store.session(&id)?;
    let version = s.store.version(&session.model_version_id)?;
    let (session, query) = s.store.update_session(&id, req.revision, |x| {
        x.run_diagnosis(&version, &req.problem_id, &evidence)
            .cloned()
    })?;
    mutated(session, query)
}

async fn ledger(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let session = s.store.session(&id)?;
    let version = s.store.version(&session.model_version_id)?;
    let drift = session.verify_ledger(&version)?;
    ok(json!({ "queries": session.queries, "replay_max_difference": drift }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CauseRequest {
    revision: u64,
    systematic_error_id: String,
    cause: CauseRef,
    category: String,
    #[serde(default)]
    problem_id: Option<String>,
    #[serde(default)]
    rationale: String,
}

async fn record_cause(
    State(s): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: CauseRequest = body(&bytes)?;
    let session = s.store.session(&id)?;
    let version = s.store.version(&session.model_version_id)?;
    let (session, cause_id) = s.store.update_session(&id, req.revision, |x| {
        x.record_cause(
            &version,
            &req.systematic_error_id,
            req.cause,
            &req.category,
            req.problem_id.as_deref(),
            &req.rationale,
        )
    })?;
    mutated(session, json!({ "cause_id": cause_id }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionRequest {
    revision: u64,
    linked_causes: Vec<String>,
    description: String,
    #[serde(default)]
    owner: String,
}

async fn propose_action(
    State(s): State<AppState>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult {
    let req: ActionRequest = body(&bytes)?;
    let (session, action_id) = s.store.update_session(&id, req.revision, |x| {
        x.propose_action(&req.linked_causes, &req.description, &req.owner)
    })?;
    mutated(session, json!({ "action_id": action_id }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatusRequest {
    revision: u64,
    status: ActionStatus,
}

async fn set_action_status(
    State(s): State<AppState>,
    Path((id, action_id)): Path<(String, String)>,
    bytes: Bytes,
) -> ApiResult {
    let req: StatusRequest = body(&bytes)?;
    let (session, ()) = s.store.update_session(&id, req.revision, |x| {
        x.set_action_status(&action_id, req.status)
    })?;
    mutated(session, ())
}

async fn document(State(s): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: RevisionOnly = body(&bytes)?;
    let (session, report) = s
        .store
        .update_session(&id, req.revision, |x| x.document().cloned())?;
    mutated(session, report)
}

async fn get_report(State(s): State<AppState>, Path(id): Path<String>, q: Q) -> ApiResult {
    let session = s.store.session(&id)?;
    let report = generate_report(&session)?;
    match q.get("format").map(String::as_str) {
        None | Some("json") => Ok((
            [(header::CONTENT_TYPE, "application/json")],
            report.to_json(),
        )
            .into_response()),
        Some("text") => Ok((
            [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
            report.to_text(),
        )
            .into_response()),
        Some(other) => Err(ApiError::bad_request(format!(
            "format must be json or text, not {other}"
        ))),
    }
}

// Defects and iteration statistics.

async fn upload_defects(State(s): State<AppState>, q: Q, bytes: Bytes) -> ApiResult {
    let defects = read_defects(text(&bytes)?.as_bytes())?;
    let count = defects.len();
    let collection = s.store.add_defects(defects, query_usize(&q, "revision")?)?;
    created(
        json!({ "added": count, "total": collection.defects.len(), "revision": collection.revision }),
    )
}

async fn list_defects(State(s): State<AppState>, q: Q) -> ApiResult {
    let collection = s.store.defects();
    let iteration = q.get("iteration");
    let defects: Vec<_> = collection
        .defects
        .into_iter()
        .filter(|d| iteration.is_none_or(|i| &d.iteration_id == i))
        .collect();
    ok(json!({ "revision": collection.revision, "defects": defects }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TagRequest {
    revision: u64,
    #[serde(default)]
    detail_tag: Option<String>,
    #[serde(default)]
    systematic_error_id: Option<String>,
}

async fn tag_defect(State(s): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let req: TagRequest = body(&bytes)?;
    ok(s.store
        .tag_defect(&id, req.revision, req.detail_tag, req.systematic_error_id)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IterationsRequest {
    units_csv: String,
    effort_csv: String,
}

async fn upload_iterations(State(s): State<AppState>, bytes: Bytes) -> ApiResult {
    let req: IterationsRequest = body(&bytes)?;
    let units = read_units(req.units_csv.as_bytes())?;
    let effort = read_effort(req.effort_csv.as_bytes())?;
    let stats = assemble_stats(&units, &effort)?;
    created(s.store.put_stats(stats)?)
}

async fn list_iterations(State(s): State<AppState>) -> ApiResult {
    ok(s.store.stats())
}

// Analytics.

async fn analytics_pareto(State(s): State<AppState>, q: Q) -> ApiResult {
    ok(ops::pareto_report(
        &s.store.defects().defects,
        q.get("iteration").map(String::as_str),
    )?)
}

async fn analytics_uchart(State(s): State<AppState>, q: Q) -> ApiResult {
    let basis = q
        .get("basis")
        .map(|b| b.parse())
        .transpose()?
        .unwrap_or_default();
    let report = ops::u_chart_report(
        &s.store.stats(),
        &s.store.defects().defects,
        q.get("iteration").map(String::as_str),
        basis,
    )?;
    ok(report)
}

async fn analytics_density(State(s): State<AppState>, q: Q) -> ApiResult {
    ok(ops::density_table(
        &s.store.stats(),
        &s.store.defects().defects,
        q.get("iteration").map(String::as_str),
    )?)
}

async fn analytics_efficiency(State(s): State<AppState>, q: Q) -> ApiResult {
    ok(ops::efficiency_table(
        &s.store.stats(),
        &s.store.defects().defects,
        q.get("iteration").map(String::as_str),
    )?)
}

async fn analytics_details(State(s): State<AppState>, q: Q) -> ApiResult {
    let min_count = query_usize(&q, "min_count")?.unwrap_or(0) as usize;
    ok(ops::details_table(
        &s.store.defects().defects,
        q.get("iteration").map(String::as_str),
        q.get("nature").map(String::as_str),
        min_count,
    )?)
}

use serde_json::{json, Value};

use crate::store::SCHEMA_VERSION;

pub const API_DESCRIPTION_FORMAT: &str = "dca-api-description";

/// (method, path, mutating, request body, response body, summary)
pub const ENDPOINTS: &[(&str, &str, bool, &str, &str, &str)] = &[
    (
        "GET",
        "/api",
        false,
        "none",
        "ApiDescription",
        "This document",
    ),
    (
        "GET",
        "/.well-known/dca-api.json",
        false,
        "none",
        "ApiDescription",
        "This document at its well-known location",
    ),
    (
        "GET",
        "/api/health",
        false,
        "none",
        "Health",
        "Liveness and store schema version",
    ),
    (
        "POST",
        "/api/models",
        true,
        "ModelDocument",
        "StoredModel",
        "Upload and validate a cause-effect model",
    ),
    (
        "GET",
        "/api/models",
        false,
        "none",
        "ModelSummary[]",
        "List uploaded models",
    ),
    (
        "POST",
        "/api/models/validate",
        false,
        "ModelDocument",
        "ValidationResult",
        "Report every issue of a model document",
    ),
    (
        "POST",
        "/api/models/compile",
        false,
        "ModelDocument",
        "CompiledModel",
        "Compile a model to its network structure",
    ),
    (
        "GET",
        "/api/models/{id}",
        false,
        "none",
        "StoredModel",
        "Fetch an uploaded model",
    ),
    (
        "POST",
        "/api/training",
        true,
        "TrainRequest",
        "Job",
        "Start EM training of a model on a citation file",
    ),
    (
        "GET",
        "/api/training/{id}",
        false,
        "none",
        "Job",
        "Poll a training or retraining job",
    ),
    (
        "GET",
        "/api/versions",
        false,
        "none",
        "VersionSummary[]",
        "List trained model versions",
    ),
    (
        "GET",
        "/api/versions/{id}",
        false,
        "none",
        "ModelVersion",
        "Inspect a model version",
    ),
    (
        "GET",
        "/api/versions/{id}/trace",
        false,
        "none",
        "LoglikTrace",
        "EM objective per iteration",
    ),
    (
        "GET",
        "/api/versions/{id}/network",
        false,
        "none",
        "NetworkDocument",
        "Trained network document",
    ),
    (
        "POST",
        "/api/versions/{id}/diagnose",
        false,
        "DiagnoseRequest",
        "DiagnosisView",
        "Ranked cause posteriors for a problem",
    ),
    (
        "POST",
        "/api/versions/{id}/retrain",
        true,
        "RetrainRequest",
        "Job",
        "Append session citations and learn a child version",
    ),
    (
        "POST",
        "/api/sessions",
        true,
        "CreateSession",
        "Session",
        "Open a DCA session on a model version",
    ),
    (
        "GET",
        "/api/sessions",
        false,
        "none",
        "SessionSummary[]",
        "List sessions",
    ),
    (
        "GET",
        "/api/sessions/{id}",
        false,
        "none",
        "Session",
        "Fetch a session",
    ),
    (
        "POST",
        "/api/sessions/{id}/advance",
        true,
        "AdvanceRequest",
        "Mutation<null>",
        "Move to the next or an earlier step",
    ),
    (
        "POST",
        "/api/sessions/{id}/sample",
        true,
        "SampleRequest",
        "Mutation<null>",
        "Set the defect sample",
    ),
    (
        "POST",
        "/api/sessions/{id}/classify",
        true,
        "RevisionOnly",
        "Mutation<Classification>",
        "Snapshot Pareto and U-charts of the sample",
    ),
    (
        "POST",
        "/api/sessions/{id}/systematic-errors",
        true,
        "SystematicErrorRequest",
        "Mutation<Warnings>",
        "Add a systematic error",
    ),
    (
        "DELETE",
        "/api/sessions/{id}/systematic-errors/{error_id}",
        true,
        "query revision",
        "Mutation<null>",
        "Remove an unreferenced systematic error",
    ),
    (
        "POST",
        "/api/sessions/{id}/diagnose",
        true,
        "SessionDiagnoseRequest",
        "Mutation<DiagnosticQuery>",
        "Diagnose and append to the evidence ledger",
    ),
    (
        "GET",
        "/api/sessions/{id}/ledger",
        false,
        "none",
        "Ledger",
        "Evidence ledger with replay check",
    ),
    (
        "POST",
        "/api/sessions/{id}/causes",
        true,
        "CauseRequest",
        "Mutation<CauseId>",
        "Record a determined cause",
    ),
    (
        "POST",
        "/api/sessions/{id}/actions",
        true,
        "ActionRequest",
        "Mutation<ActionId>",
        "Propose an action",
    ),
    (
        "POST",
        "/api/sessions/{id}/actions/{action_id}/status",
        true,
        "StatusRequest",
        "Mutation<null>",
        "Move an action to in_progress or done",
    ),
    (
        "POST",
        "/api/sessions/{id}/report",
        true,
        "RevisionOnly",
        "Mutation<Report>",
        "Generate and store the meeting report",
    ),
    (
        "GET",
        "/api/sessions/{id}/report",
        false,
        "query format=json|text",
        "Report",
        "Render the meeting report",
    ),
    (
        "POST",
        "/api/defects",
        true,
        "text/csv defect file; query revision",
        "UploadResult",
        "Append defects",
    ),
    (
        "GET",
        "/api/defects",
        false,
        "query iteration",
        "DefectCollection",
        "List defects",
    ),
    (
        "POST",
        "/api/defects/{id}/tag",
        true,
        "TagRequest",
        "DefectRecord",
        "Set detail tag and systematic error",
    ),
    (
        "POST",
        "/api/iterations",
        true,
        "IterationsRequest",
        "IterationStats[]",
        "Upload unit sizes and inspection effort",
    ),
    (
        "GET",
        "/api/iterations",
        false,
        "none",
        "IterationStats[]",
        "List iteration statistics",
    ),
    (
        "GET",
        "/api/analytics/pareto",
        false,
        "query iteration",
        "ParetoReport",
        "Pareto of defect natures",
    ),
    (
        "GET",
        "/api/analytics/uchart",
        false,
        "query iteration, basis=fp|hours",
        "UChartReport",
        "U-chart with limits and flags",
    ),
    (
        "GET",
        "/api/analytics/density",
        false,
        "query iteration",
        "IterationMetric[]",
        "Defects per function point",
    ),
    (
        "GET",
        "/api/analytics/efficiency",
        false,
        "query iteration",
        "IterationMetric[]",
        "Defects per inspection hour",
    ),
    (
        "GET",
        "/api/analytics/details",
        false,
        "query iteration, nature, min_count",
        "DetailCount[]",
        "Detail tag histogram",
    ),
];

pub fn api_description() -> Value {
    let endpoints: Vec<Value> = ENDPOINTS
        .iter()
        .map(|(method, path, mutating, request, response, summary)| {
            json!({
                "method": method,
                "path": path,
                "mutating": mutating,
                "request": request,
                "response": response,
                "summary": summary,
            })
        })
        .collect();
    json!({
        "format": API_DESCRIPTION_FORMAT,
        "version": 1,
        "store_schema_version": SCHEMA_VERSION,
        "content_type": "application/json",
        "error": {
            "shape": {"code": "string", "message": "string", "detail": "any"},
            "status": {
                "400": "validation failure",
                "404": "missing resource or identifier",
                "409": "stale revision on a mutating request",
                "422": "evidence has probability zero",
                "500": "storage or learning failure",
            },
        },
        "concurrency": "mutating session and defect requests carry the revision they were based on",
        "schemas": {
            "DiagnoseRequest": {"problem_id": "string", "evidence": {"<cause id>": "true|false"}},
            "SessionDiagnoseRequest": {"revision": "u64", "problem_id": "string", "evidence": {"<cause id>": "true|false"}},
            "TrainRequest": {"model_id": "string", "citations_csv": "string", "options": "TrainingOptions"},
            "RetrainRequest": {"session_ids": ["string"], "options": "TrainingOptions"},
            "TrainingOptions": {
                "max_iterations": "usize?", "tolerance": "f64?", "alpha": "f64?",
                "seed": "u64?", "restarts": "usize?", "init": "random|structure?",
            },
            "CreateSession": {"model_version_id": "string"},
            "AdvanceRequest": {"revision": "u64", "to": "select_sample|classify|identify_systematic_errors|determine_causes|develop_actions|document"},
            "SampleRequest": {"revision": "u64", "defect_ids": ["string"]},
            "RevisionOnly": {"revision": "u64"},
            "SystematicErrorRequest": {
                "revision": "u64", "id": "string", "label": "string", "defect_category": "DefectNature",
                "iteration_id": "string", "members": ["string"],
            },
            "CauseRequest": {
                "revision": "u64", "systematic_error_id": "string",
                "cause": {"kind": "model|free_text", "cause_id": "string (model)", "text": "string (free_text)"},
                "category": "string", "problem_id": "string?", "rationale": "string?",
            },
            "ActionRequest": {"revision": "u64", "linked_causes": ["string"], "description": "string", "owner": "string?"},
            "StatusRequest": {"revision": "u64", "status": "proposed|in_progress|done"},
            "TagRequest": {"revision": "u64", "detail_tag": "string?", "systematic_error_id": "string?"},
            "IterationsRequest": {"units_csv": "iteration,unit,size_fp", "effort_csv": "iteration,hours"},
            "Mutation<T>": {"session": "Session", "result": "T"},
            "Job": {
                "id": "string", "kind": "train|retrain", "status": "running|succeeded|failed",
                "version_id": "string?", "error": "ApiError?",
            },
            "DefectNature": ["ambiguity", "extraneous information", "inconsistent information", "incorrect fact", "omission"],
        },
        "endpoints": endpoints,
    })
}

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use dca_core::analytics::AnalyticsError;
use dca_core::bn::BnError;
use dca_core::learn::LearnError;
use dca_core::model::ModelError;
use dca_core::session::SessionError;

use crate::store::StoreError;

/// Error body shared by every endpoint and the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub detail: Value,
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        Self::new("not-found", format!("{kind} {id} does not exist"))
            .with_detail(serde_json::json!({"kind": kind, "id": id}))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new("invalid-request", message)
    }

    pub fn status(&self) -> StatusCode {
        status_for(&self.code)
    }

    /// Runtime failures exit with 2, everything else is a validation error.
    pub fn exit_code(&self) -> i32 {
        if self.status().is_server_error() {
            2
        } else {
            1
        }
    }
}

pub fn status_for(code: &str) -> StatusCode {
    match code {
        "not-found" | "no-route" | "unknown-version" | "unknown-id" | "unknown-iteration" => {
            StatusCode::NOT_FOUND
        }
        "conflict" => StatusCode::CONFLICT,
        "evidence-inconsistent" => StatusCode::UNPROCESSABLE_ENTITY,
        "io-error" | "store-corrupt" | "store-integrity" | "schema-mismatch" | "learn-failure"
        | "internal" | "injected-crash" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        let detail = match &e {
            ModelError::Format { line, .. } => serde_json::json!({ "line": line }),
            _ => Value::Null,
        };
        ApiError::new(e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        let detail = match &e {
            AnalyticsError::Format { line, .. } => serde_json::json!({ "line": line }),
            _ => Value::Null,
        };
        ApiError::new(e.code(), e.to_string()).with_detail(detail)
    }
}

impl From<BnError> for ApiError {
    fn from(e: BnError) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

impl From<LearnError> for ApiError {
    fn from(e: LearnError) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Model(m) => m.into(),
            SessionError::Analytics(a) => a.into(),
            SessionError::Conflict { expected, actual } => ApiError::new("conflict", e.to_string())
                .with_detail(serde_json::json!({ "expected": expected, "actual": actual })),
            other => ApiError::new(other.code(), other.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound { kind, id } => ApiError::not_found(kind, &id),
            StoreError::Session(s) => s.into(),
            StoreError::Analytics(a) => a.into(),
            StoreError::Model(m) => m.into(),
            other => ApiError::new(other.code(), other.to_string()),
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::new("io-error", e.to_string())
    }
}

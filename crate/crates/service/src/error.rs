use adinfer::InferenceError;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// Error body sent to clients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
            },
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} `{id}`"))
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn code(&self) -> &'static str {
        self.body.code
    }
}

impl From<InferenceError> for ApiError {
    fn from(e: InferenceError) -> Self {
        let message = e.to_string();
        match e {
            InferenceError::Conflict { .. } => Self::new(StatusCode::CONFLICT, "conflict", message),
            InferenceError::ImpossibleEvidence => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "impossible_evidence", message)
            }
            InferenceError::UnknownNode(_) => Self::bad_request("unknown_feature", message),
            InferenceError::UnknownValue { .. } => Self::bad_request("unknown_value", message),
            InferenceError::CutsetEvidence { .. } => Self::bad_request("diagnosis_observed", message),
            InferenceError::InvalidPolicy(_) | InferenceError::InvalidCutset(_) => {
                Self::bad_request("invalid_mode", message)
            }
            InferenceError::Parse { .. }
            | InferenceError::Cycle { .. }
            | InferenceError::RowSum { .. }
            | InferenceError::Dimension { .. }
            | InferenceError::InvalidNetwork(_) => Self::bad_request("invalid_network", message),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

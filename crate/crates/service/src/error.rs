use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use polytope_core::{StorageError, SyntacticLabel, ValidationError};
use serde_json::json;

/// An error response: `{"error": {"code", "message", "valid_labels"?}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub valid_labels: Option<Vec<SyntacticLabel>>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), valid_labels: None }
    }

    pub fn missing_annotator() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "MissingAnnotator", "the X-Annotator header is required")
    }

    pub fn invalid_annotator(id: &str) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidAnnotator", format!("invalid annotator id {id:?}"))
    }

    pub fn unknown_annotator(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownAnnotator", format!("annotator {id:?} has no session"))
    }

    pub fn unknown_sample(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownSample", format!("no sample {id:?}"))
    }

    /// `shown` is the target as the client wrote it.
    pub fn unknown_target(sample_id: &str, shown: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownTarget", format!("sample {sample_id:?} has no target {shown:?}"))
    }

    pub fn not_assigned(sample_id: &str, shown: &str) -> Self {
        Self::new(StatusCode::FORBIDDEN, "NotAssigned", format!("{sample_id}/{shown} is not in this session"))
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", format!("no live annotation {id:?}"))
    }

    pub fn not_owner(id: &str) -> Self {
        Self::new(StatusCode::FORBIDDEN, "NotOwner", format!("annotation {id:?} belongs to another annotator"))
    }

    pub fn invalid_payload(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidPayload", message)
    }

    pub fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl From<ValidationError> for ApiError {
    fn from(e: ValidationError) -> Self {
        let status = match &e {
            ValidationError::DuplicateAnnotation(_) | ValidationError::DuplicateId(_) => StatusCode::CONFLICT,
            ValidationError::UnknownSample(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let valid_labels = match &e {
            ValidationError::InvalidCell { valid_labels, .. } => Some(valid_labels.clone()),
            _ => None,
        };
        ApiError { status, code: e.code(), message: e.to_string(), valid_labels }
    }
}

impl From<StorageError> for ApiError {
    fn from(e: StorageError) -> Self {
        tracing::error!(error = %e, "log write failed");
        ApiError::internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(labels) = self.valid_labels {
            error["valid_labels"] = json!(labels);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

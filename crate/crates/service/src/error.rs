use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use minecast::{AnalyticsError, PipelineError};
use serde::Serialize;

/// Error payload shared by every endpoint and the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub field: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>, field: Option<&str>) -> Self {
        Self {
            status,
            body: ErrorBody { code: code.to_string(), message: message.into(), field: field.map(str::to_string) },
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>, field: &str) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message, Some(field))
    }

    pub fn missing(field: &str) -> Self {
        Self::bad_request("missing_parameter", format!("query parameter {field:?} is required"), field)
    }

    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::bad_request("invalid_parameter", message, field)
    }

    pub fn not_found(code: &str, message: impl Into<String>, field: Option<&str>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message, field)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, None)
    }

    /// Whether the failure is the caller's fault (bad input or selection).
    pub fn is_client_error(&self) -> bool {
        self.status.is_client_error()
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.body.code, self.body.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let message = e.to_string();
        match &e {
            PipelineError::Invalid { field, .. } => ApiError::invalid(field, message),
            PipelineError::Selection { field, .. } => ApiError::not_found("selection", message, Some(field)),
            PipelineError::TooShort { .. } => ApiError::bad_request("too_short", message, "target"),
            PipelineError::Model(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "model", message, None),
        }
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        let message = e.to_string();
        match e {
            AnalyticsError::Empty => ApiError::not_found("empty_selection", message, None),
            AnalyticsError::UnknownDepartment(_) => ApiError::not_found("unknown_department", message, Some("name")),
            AnalyticsError::Bins => ApiError::invalid("bins", message),
            AnalyticsError::GroupBy(_) => ApiError::invalid("group_by", message),
            AnalyticsError::Degenerate(_) => ApiError::bad_request("degenerate", message, "mineral"),
        }
    }
}

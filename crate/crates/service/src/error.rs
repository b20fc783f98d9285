use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Request};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use spineplan_core::{ParseError, SessionError};

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub detail: Value,
}

/// An error on its way to becoming a response.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

/// Shown to the operator when a click lands on no detected box.
pub const NO_MATCH_MESSAGE: &str = "No matching bounding box found at the clicked location. Click inside a detected vertebra.";

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>, detail: Value) -> Self {
        ApiError { status, body: ErrorBody { code: code.into(), message: message.into(), detail } }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", message, Value::Null)
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UNKNOWN_SESSION", format!("no session '{id}'"), json!({ "session": id }))
    }

    pub fn session_exists(id: &str) -> Self {
        Self::new(StatusCode::CONFLICT, "SESSION_EXISTS", format!("session '{id}' already exists"), json!({ "session": id }))
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", message, Value::Null)
    }

    pub fn detector_failed(message: impl Into<String>, detail: Value) -> Self {
        Self::new(StatusCode::BAD_GATEWAY, "DETECTOR_FAILED", message, detail)
    }

    pub fn detector_parse(file: &str, e: &ParseError) -> Self {
        Self::detector_failed(
            format!("{file}: {e}"),
            json!({ "file": file, "parse_error": { "line": e.line, "reason": e.reason } }),
        )
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::InvalidImage(_) => StatusCode::BAD_REQUEST,
            SessionError::NoMatch { .. }
            | SessionError::DuplicateBox { .. }
            | SessionError::Unpaired(_)
            | SessionError::DuplicateScrew { .. }
            | SessionError::EmptyPlan => StatusCode::CONFLICT,
            SessionError::UnknownScrew(_) => StatusCode::NOT_FOUND,
            SessionError::InvalidBox { .. }
            | SessionError::OutOfBounds { .. }
            | SessionError::DegenerateScrew
            | SessionError::InvalidParams(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::CorruptSession(_) | SessionError::CorruptPlan(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let (message, detail) = match &e {
            SessionError::NoMatch { view, point } => {
                (NO_MATCH_MESSAGE.to_string(), json!({ "view": view, "u": point.u, "v": point.v }))
            }
            SessionError::DuplicateBox { view, existing } => (e.to_string(), json!({ "view": view, "existing": existing })),
            SessionError::Unpaired(label) => (e.to_string(), json!({ "label": label })),
            SessionError::DuplicateScrew { label, side } => (e.to_string(), json!({ "label": label, "side": side })),
            SessionError::UnknownScrew(id) => (e.to_string(), json!({ "screw": id })),
            SessionError::InvalidBox { index, reason } => (e.to_string(), json!({ "index": index, "reason": reason })),
            SessionError::OutOfBounds { view, index } => (e.to_string(), json!({ "view": view, "index": index })),
            _ => (e.to_string(), Value::Null),
        };
        ApiError::new(status, e.code(), message, detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// JSON extractor whose rejections use the service error body.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(rejection) => Err(rejection_error(rejection)),
        }
    }
}

fn rejection_error(rejection: JsonRejection) -> ApiError {
    ApiError::bad_request(rejection.body_text())
}

/// Path extractor whose rejections use the service error body.
pub struct ApiPath<T>(pub T);

impl<S, T> axum::extract::FromRequestParts<S> for ApiPath<T>
where
    T: DeserializeOwned + Send,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut axum::http::request::Parts, state: &S) -> Result<Self, Self::Rejection> {
        match axum::extract::Path::<T>::from_request_parts(parts, state).await {
            Ok(axum::extract::Path(v)) => Ok(ApiPath(v)),
            Err(rejection) => Err(ApiError::bad_request(rejection.body_text())),
        }
    }
}

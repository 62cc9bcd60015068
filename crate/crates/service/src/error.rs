use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

use crate::api::{ErrorBody, FieldError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApiError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("invalid `{}`: {}", .0.field, .0.message)]
    Invalid(FieldError),
    #[error("malformed request: {0}")]
    Malformed(String),
    /// The request conflicts with the session's state; `retry` tells the
    /// client whether it may succeed after the next step.
    #[error("{message}")]
    Conflict { message: String, retry: bool },
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn conflict(message: impl Into<String>, retry: bool) -> Self {
        ApiError::Conflict {
            message: message.into(),
            retry,
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Invalid(_) => StatusCode::BAD_REQUEST,
            ApiError::Malformed(_) => StatusCode::BAD_REQUEST,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: self.to_string(),
            field: match self {
                ApiError::Invalid(f) => Some(f.field.clone()),
                _ => None,
            },
            retry: matches!(self, ApiError::Conflict { retry: true, .. }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

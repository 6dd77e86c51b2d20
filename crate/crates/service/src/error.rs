use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("{message}")]
    Conflict { message: String, complete: bool },
    #[error("{0}")]
    Gone(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::Gone(_) => StatusCode::GONE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ApiError::NotFound(_) => "not_found",
            ApiError::Unprocessable(_) => "unprocessable",
            ApiError::Conflict { complete: true, .. } => "budget_exhausted",
            ApiError::Conflict { .. } => "conflict",
            ApiError::Gone(_) => "session_expired",
            ApiError::Internal(_) => "internal",
        }
    }

    pub fn with_revision(self, revision: Option<u64>) -> RevisionedError {
        RevisionedError { error: self, revision }
    }
}

impl From<jodkit::Error> for ApiError {
    fn from(e: jodkit::Error) -> Self {
        if e.is_input_error() {
            ApiError::Unprocessable(e.to_string())
        } else {
            ApiError::Internal(e.to_string())
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Internal(format!("storage: {e}"))
    }
}

/// An error together with the study revision it was observed at.
#[derive(Debug)]
pub struct RevisionedError {
    pub error: ApiError,
    pub revision: Option<u64>,
}

impl From<ApiError> for RevisionedError {
    fn from(error: ApiError) -> Self {
        RevisionedError { error, revision: None }
    }
}

impl IntoResponse for RevisionedError {
    fn into_response(self) -> Response {
        let mut body = json!({
            "error": self.error.code(),
            "message": self.error.to_string(),
            "revision": self.revision,
        });
        if let ApiError::Conflict { complete, .. } = self.error {
            body["complete"] = json!(complete);
        }
        (self.error.status(), Json(body)).into_response()
    }
}

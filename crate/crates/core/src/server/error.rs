//! Standardized error bodies: every non-2xx response is an [`ApiError`].

use crate::dataflow::GraphError;
use crate::engine::EngineError;
use crate::registry::RegistryError;
use crate::search::SearchError;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Structured error payload: type identification, numeric code, the
/// parameters that failed, and free-form details.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(rename = "type")]
    pub kind: String,
    pub code: u16,
    #[serde(rename = "failedParameters")]
    pub failed_parameters: BTreeMap<String, String>,
    pub details: String,
}

impl ApiError {
    pub fn new(kind: impl Into<String>, code: StatusCode, details: impl Into<String>) -> Self {
        ApiError {
            kind: kind.into(),
            code: code.as_u16(),
            failed_parameters: BTreeMap::new(),
            details: details.into(),
        }
    }

    pub fn with_parameter(mut self, name: impl Into<String>, problem: impl Into<String>) -> Self {
        self.failed_parameters.insert(name.into(), problem.into());
        self
    }

    pub fn not_found(details: impl Into<String>) -> Self {
        ApiError::new("NotFound", StatusCode::NOT_FOUND, details)
    }

    pub fn unauthorized(details: impl Into<String>) -> Self {
        ApiError::new("Unauthorized", StatusCode::UNAUTHORIZED, details)
    }

    pub fn validation(details: impl Into<String>) -> Self {
        ApiError::new("Validation", StatusCode::BAD_REQUEST, details)
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

impl From<RegistryError> for ApiError {
    fn from(error: RegistryError) -> Self {
        match &error {
            RegistryError::NotFound => ApiError::not_found(error.to_string()),
            RegistryError::Unauthorized => ApiError::unauthorized(error.to_string()),
            RegistryError::DuplicateUser(name) => {
                ApiError::new("DuplicateUser", StatusCode::CONFLICT, error.to_string())
                    .with_parameter("user_name", format!("`{name}` is taken"))
            }
            RegistryError::InvalidCredentials => {
                ApiError::new("InvalidCredentials", StatusCode::UNAUTHORIZED, error.to_string())
            }
            RegistryError::InvalidDescriptor(_) => {
                ApiError::new("InvalidDescriptor", StatusCode::BAD_REQUEST, error.to_string())
            }
            RegistryError::InvalidGraph(_) => {
                ApiError::new("InvalidGraph", StatusCode::BAD_REQUEST, error.to_string())
            }
            RegistryError::Search(inner) => ApiError::from(inner.clone()),
            RegistryError::Io(_) => ApiError::new(
                "Internal",
                StatusCode::INTERNAL_SERVER_ERROR,
                error.to_string(),
            ),
        }
    }
}

impl From<SearchError> for ApiError {
    fn from(error: SearchError) -> Self {
        match &error {
            SearchError::InvalidScope(scope) => {
                ApiError::new("InvalidScope", StatusCode::BAD_REQUEST, error.to_string())
                    .with_parameter("type", format!("`{scope}` is not pe|workflow|both"))
            }
            SearchError::DimMismatch(..) => {
                ApiError::new("DimMismatch", StatusCode::BAD_REQUEST, error.to_string())
            }
            SearchError::ProviderUnavailable(_) => ApiError::new(
                "ProviderUnavailable",
                StatusCode::INTERNAL_SERVER_ERROR,
                error.to_string(),
            ),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(error: EngineError) -> Self {
        match &error {
            EngineError::UnresolvedPE(name) => {
                ApiError::new("UnresolvedPE", StatusCode::BAD_REQUEST, error.to_string())
                    .with_parameter("workflow", format!("PE `{name}` has no behavior"))
            }
            EngineError::UnsupportedMapping(name) => {
                ApiError::new("UnsupportedMapping", StatusCode::BAD_REQUEST, error.to_string())
                    .with_parameter("process", name.clone())
            }
            EngineError::PathEscape(path) => {
                ApiError::new("PathEscape", StatusCode::BAD_REQUEST, error.to_string())
                    .with_parameter("resources", path.clone())
            }
            EngineError::DecodeError(path) => {
                ApiError::new("DecodeError", StatusCode::BAD_REQUEST, error.to_string())
                    .with_parameter("resources", path.clone())
            }
            EngineError::MissingRequirements(missing) => {
                ApiError::new("MissingRequirements", StatusCode::BAD_REQUEST, error.to_string())
                    .with_parameter("imports", missing.join(", "))
            }
            EngineError::Io(_) => ApiError::new(
                "Internal",
                StatusCode::INTERNAL_SERVER_ERROR,
                error.to_string(),
            ),
            EngineError::Graph(inner) => ApiError::from(inner.clone()),
        }
    }
}

impl From<GraphError> for ApiError {
    fn from(error: GraphError) -> Self {
        let kind = match &error {
            GraphError::UnsupportedMapping(_) => "UnsupportedMapping",
            GraphError::TooFewProcesses { .. } => "TooFewProcesses",
            GraphError::CycleDetected => "CycleDetected",
            _ => "InvalidGraph",
        };
        ApiError::new(kind, StatusCode::BAD_REQUEST, error.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shape_is_exactly_four_fields() {
        let error = ApiError::validation("bad body").with_parameter("input", "must be >= 0");
        let value = serde_json::to_value(&error).unwrap();
        let object = value.as_object().unwrap();
        let mut keys: Vec<&str> = object.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, vec!["code", "details", "failedParameters", "type"]);
        assert_eq!(object["code"], 400);
        assert_eq!(object["type"], "Validation");
    }

    #[test]
    fn status_mapping() {
        assert_eq!(ApiError::from(RegistryError::NotFound).code, 404);
        assert_eq!(ApiError::from(RegistryError::Unauthorized).code, 401);
        assert_eq!(ApiError::from(RegistryError::DuplicateUser("a".into())).code, 409);
        assert_eq!(ApiError::from(RegistryError::InvalidCredentials).code, 401);
        assert_eq!(
            ApiError::from(SearchError::ProviderUnavailable("down".into())).code,
            500
        );
        assert_eq!(
            ApiError::from(EngineError::UnsupportedMapping("REDIS".into())).code,
            400
        );
    }
}

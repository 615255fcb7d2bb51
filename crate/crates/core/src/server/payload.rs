//! Base64 payload transport for code and graph documents.

use base64::Engine as _;

/// Encodes a text payload for transport or storage.
pub fn serialize_payload(text: &str) -> String {
    base64::engine::general_purpose::STANDARD.encode(text.as_bytes())
}

/// Decodes a transported payload. Malformed base64 or non-UTF-8 content is
/// a `DecodeError`.
pub fn deserialize_payload(encoded: &str) -> Result<String, super::ApiError> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(encoded.as_bytes())
        .map_err(|e| {
            super::ApiError::new(
                "DecodeError",
                axum::http::StatusCode::BAD_REQUEST,
                format!("invalid base64 payload: {e}"),
            )
        })?;
    String::from_utf8(bytes).map_err(|_| {
        super::ApiError::new(
            "DecodeError",
            axum::http::StatusCode::BAD_REQUEST,
            "payload is not valid UTF-8",
        )
    })
}

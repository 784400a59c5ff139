use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use mx_core::{ErrorCode, PredictionEnvelope};

const JSON: HeaderValue = HeaderValue::from_static("application/json");

pub fn json_bytes(status: StatusCode, body: impl Into<axum::body::Body>) -> Response {
    (status, [(header::CONTENT_TYPE, JSON)], body.into()).into_response()
}

pub fn envelope(env: &PredictionEnvelope) -> Response {
    let status = StatusCode::from_u16(env.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    json_bytes(status, env.to_json_bytes())
}

pub fn error(code: ErrorCode, message: impl Into<String>) -> Response {
    envelope(&PredictionEnvelope::error(code, message))
}

/// Error envelope for statuses outside the model-service code set, such as
/// the registry's 409.
pub fn status_error(status: StatusCode, message: impl Into<String>) -> Response {
    match ErrorCode::from_u16(status.as_u16()) {
        Some(code) => error(code, message),
        None => {
            let body = serde_json::json!({
                "status": "error",
                "error": {"code": status.as_u16(), "message": message.into()},
            });
            json_bytes(status, serde_json::to_vec(&body).expect("json"))
        }
    }
}

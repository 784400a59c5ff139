//! REST surface of the registry.
//!
//! ```text
//! GET    /health
//! GET    /v1/models
//! POST   /v1/models                {"id": "...", "url": "..."}
//! GET    /v1/models/{id}
//! DELETE /v1/models/{id}
//! POST   /v1/models/{id}/predict   proxied verbatim to {url}/model/predict
//! ```

use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Request, State};
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use http_body_util::{BodyExt, LengthLimitError, Limited};
use mx_core::ErrorCode;
use serde::Deserialize;

use super::{Registry, RegistryError};
use crate::access_log::access_log;
use crate::response;

pub fn router(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/health", get(health).fallback(no_route))
        .route("/v1/models", get(list).post(register).fallback(no_route))
        .route("/v1/models/{id}", get(get_one).delete(deregister).fallback(no_route))
        .route("/v1/models/{id}/predict", post(proxy_predict).fallback(no_route))
        .fallback(no_route)
        .layer(axum::middleware::from_fn(access_log))
        .with_state(registry)
}

fn json<T: serde::Serialize>(status: StatusCode, value: &T) -> Response {
    response::json_bytes(status, serde_json::to_vec(value).expect("json"))
}

impl IntoResponse for RegistryError {
    fn into_response(self) -> Response {
        let status = match &self {
            RegistryError::Conflict(_) => StatusCode::CONFLICT,
            RegistryError::IdMismatch { .. } | RegistryError::InvalidId(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            RegistryError::InvalidUrl(_) => StatusCode::BAD_REQUEST,
            RegistryError::NotFound(_) => StatusCode::NOT_FOUND,
            RegistryError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        response::status_error(status, self.to_string())
    }
}

async fn health() -> Response {
    response::json_bytes(StatusCode::OK, &br#"{"status":"ok"}"#[..])
}

async fn no_route(method: Method, uri: Uri) -> Response {
    response::error(
        ErrorCode::NotFound,
        format!("no route for {method} {}", uri.path()),
    )
}

async fn list(State(reg): State<Arc<Registry>>) -> Response {
    json(StatusCode::OK, &reg.list())
}

async fn get_one(State(reg): State<Arc<Registry>>, Path(id): Path<String>) -> Response {
    match reg.get(&id) {
        Some(r) => json(StatusCode::OK, &r),
        None => RegistryError::NotFound(id).into_response(),
    }
}

#[derive(Deserialize)]
struct RegisterBody {
    id: String,
    url: String,
}

async fn register(State(reg): State<Arc<Registry>>, body: Bytes) -> Response {
    let req: RegisterBody = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            return response::error(
                ErrorCode::BadRequest,
                format!("expected {{\"id\": string, \"url\": string}}: {e}"),
            )
        }
    };
    match reg.register(&req.id, &req.url).await {
        Ok(r) => json(StatusCode::CREATED, &r),
        Err(e) => e.into_response(),
    }
}

async fn deregister(State(reg): State<Arc<Registry>>, Path(id): Path<String>) -> Response {
    match reg.deregister(&id).await {
        Ok(_) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => e.into_response(),
    }
}

/// Forwards body and content type unchanged; relays status, content type
/// and body unchanged. Health is advisory: unhealthy records are proxied.
async fn proxy_predict(
    State(reg): State<Arc<Registry>>,
    Path(id): Path<String>,
    req: Request,
) -> Response {
    let Some(record) = reg.get(&id) else {
        return RegistryError::NotFound(id).into_response();
    };
    let (parts, body) = req.into_parts();
    let limit = reg.config().max_proxy_body_bytes;
    let bytes = match Limited::new(body, limit).collect().await {
        Ok(c) => c.to_bytes(),
        Err(e) if e.downcast_ref::<LengthLimitError>().is_some() => {
            return response::error(
                ErrorCode::PayloadTooLarge,
                format!("request body exceeds {limit} bytes"),
            )
        }
        Err(e) => return response::error(ErrorCode::BadRequest, format!("failed to read body: {e}")),
    };

    let mut upstream = reg
        .client()
        .post(format!("{}/model/predict", record.url))
        .timeout(reg.config().proxy_timeout)
        .body(bytes);
    if let Some(ct) = parts.headers.get(header::CONTENT_TYPE) {
        upstream = upstream.header(header::CONTENT_TYPE, ct.clone());
    }
    let res = match upstream.send().await {
        Ok(r) => r,
        Err(e) => {
            tracing::warn!(id = %record.id, url = %record.url, error = %e, "upstream unreachable");
            return response::error(
                ErrorCode::BadGateway,
                format!("model service {:?} is unreachable", record.id),
            );
        }
    };
    let status = res.status();
    let content_type = res.headers().get(header::CONTENT_TYPE).cloned();
    let body = match res.bytes().await {
        Ok(b) => b,
        Err(_) => {
            return response::error(
                ErrorCode::BadGateway,
                format!("model service {:?} closed the connection", record.id),
            )
        }
    };
    let mut out = Response::new(Body::from(body));
    *out.status_mut() = status;
    if let Some(ct) = content_type {
        out.headers_mut().insert(header::CONTENT_TYPE, ct);
    }
    out
}

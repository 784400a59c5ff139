//! One model behind the standardized endpoint set:
//!
//! | method | path              |                                  |
//! |--------|-------------------|----------------------------------|
//! | GET    | `/health`         | `{"status":"ok"}` once ready     |
//! | GET    | `/model/metadata` | the model's metadata             |
//! | POST   | `/model/predict`  | prediction envelope              |
//! | GET    | `/swagger.json`   | OpenAPI 3.0 document             |
//!
//! Until a model is installed every endpoint answers 503.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::extract::{Request, State};
use axum::http::{header, HeaderMap, Method, StatusCode, Uri};
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use bytes::Bytes;
use http_body_util::{BodyExt, LengthLimitError, Limited};
use mx_core::openapi::OpenApiError;
use mx_core::{build_openapi, ErrorCode, Servable};

use crate::access_log::access_log;
use crate::negotiate::parse_predict_body;
use crate::response;

pub const DEFAULT_MAX_BODY_BYTES: usize = 4_194_304;
pub const MIN_MAX_BODY_BYTES: usize = 1024;
pub const DEFAULT_PORT: u16 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogLevel {
    Error,
    Warn,
    #[default]
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            LogLevel::Error => "error",
            LogLevel::Warn => "warn",
            LogLevel::Info => "info",
            LogLevel::Debug => "debug",
            LogLevel::Trace => "trace",
        }
    }
}

impl std::str::FromStr for LogLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "error" => LogLevel::Error,
            "warn" => LogLevel::Warn,
            "info" => LogLevel::Info,
            "debug" => LogLevel::Debug,
            "trace" => LogLevel::Trace,
            _ => return Err(format!("unknown log level {s:?}")),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind_address: SocketAddr,
    pub model_dir: PathBuf,
    pub max_body_bytes: usize,
    pub log_level: LogLevel,
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_body_bytes < MIN_MAX_BODY_BYTES {
            return Err(format!(
                "max_body_bytes must be at least {MIN_MAX_BODY_BYTES}, got {}",
                self.max_body_bytes
            ));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("model already installed")]
    AlreadyLoaded,
    #[error(transparent)]
    OpenApi(#[from] OpenApiError),
}

struct Loaded {
    model: Arc<dyn Servable>,
    metadata_json: Bytes,
    openapi_json: Bytes,
}

struct Inner {
    loaded: OnceLock<Loaded>,
    max_body_bytes: usize,
}

/// Cheap to clone; all clones share the same model slot.
#[derive(Clone)]
pub struct ModelService {
    inner: Arc<Inner>,
}

impl ModelService {
    /// A service that reports 503 until [`ModelService::install`] is called.
    pub fn new(max_body_bytes: usize) -> Self {
        ModelService {
            inner: Arc::new(Inner {
                loaded: OnceLock::new(),
                max_body_bytes,
            }),
        }
    }

    pub fn with_model(model: Arc<dyn Servable>, max_body_bytes: usize) -> Result<Self, ServiceError> {
        let svc = Self::new(max_body_bytes);
        svc.install(model)?;
        Ok(svc)
    }

    /// Makes the service ready. The metadata and OpenAPI documents are
    /// rendered once here.
    pub fn install(&self, model: Arc<dyn Servable>) -> Result<(), ServiceError> {
        let openapi = build_openapi(model.metadata(), model.io())?;
        let loaded = Loaded {
            metadata_json: serde_json::to_vec(model.metadata()).expect("metadata json").into(),
            openapi_json: serde_json::to_vec(&openapi).expect("openapi json").into(),
            model,
        };
        self.inner
            .loaded
            .set(loaded)
            .map_err(|_| ServiceError::AlreadyLoaded)
    }

    pub fn is_ready(&self) -> bool {
        self.inner.loaded.get().is_some()
    }

    pub fn max_body_bytes(&self) -> usize {
        self.inner.max_body_bytes
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/health", get(health).fallback(no_route))
            .route("/model/metadata", get(metadata).fallback(no_route))
            .route("/model/predict", post(predict).fallback(no_route))
            .route("/swagger.json", get(openapi).fallback(no_route))
            .fallback(no_route)
            .layer(axum::middleware::from_fn(access_log))
            .with_state(self.clone())
    }

    fn loaded(&self) -> Option<&Loaded> {
        self.inner.loaded.get()
    }
}

fn not_ready() -> Response {
    response::error(ErrorCode::ServiceUnavailable, "model is still loading")
}

async fn health(State(svc): State<ModelService>) -> Response {
    match svc.loaded() {
        Some(_) => response::json_bytes(StatusCode::OK, &br#"{"status":"ok"}"#[..]),
        None => not_ready(),
    }
}

async fn metadata(State(svc): State<ModelService>) -> Response {
    match svc.loaded() {
        Some(l) => response::json_bytes(StatusCode::OK, l.metadata_json.clone()),
        None => not_ready(),
    }
}

async fn openapi(State(svc): State<ModelService>) -> Response {
    match svc.loaded() {
        Some(l) => response::json_bytes(StatusCode::OK, l.openapi_json.clone()),
        None => not_ready(),
    }
}

async fn no_route(method: Method, uri: Uri) -> Response {
    response::error(
        ErrorCode::NotFound,
        format!("no route for {method} {}", uri.path()),
    )
}

fn declared_length(headers: &HeaderMap) -> Option<u64> {
    headers
        .get(header::CONTENT_LENGTH)?
        .to_str()
        .ok()?
        .parse()
        .ok()
}

async fn predict(State(svc): State<ModelService>, req: Request) -> Response {
    let loaded = match svc.loaded() {
        Some(l) => l,
        None => return not_ready(),
    };
    let limit = svc.max_body_bytes();
    let too_large = || {
        response::error(
            ErrorCode::PayloadTooLarge,
            format!("request body exceeds {limit} bytes"),
        )
    };
    let (parts, body) = req.into_parts();
    if declared_length(&parts.headers).is_some_and(|n| n > limit as u64) {
        return too_large();
    }

    let io = loaded.model.io();
    let content_type = match parts
        .headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
    {
        Some(ct) if io.accepts(ct) => ct.to_owned(),
        other => {
            return response::error(
                ErrorCode::UnsupportedMediaType,
                format!(
                    "unsupported content type {:?}; expected one of {}",
                    other.unwrap_or(""),
                    io.accepted_content_types.join(", ")
                ),
            )
        }
    };

    let bytes = match Limited::new(Body::new(body), limit).collect().await {
        Ok(c) => c.to_bytes(),
        Err(e) if e.downcast_ref::<LengthLimitError>().is_some() => return too_large(),
        Err(e) => {
            return response::error(ErrorCode::BadRequest, format!("failed to read body: {e}"))
        }
    };

    let request = match parse_predict_body(io, &content_type, bytes).await {
        Ok(r) => r,
        Err(e) => return response::error(e.code, e.message),
    };

    let model = Arc::clone(&loaded.model);
    match tokio::task::spawn_blocking(move || model.run(&request)).await {
        Ok(env) => response::envelope(&env),
        Err(_) => response::error(ErrorCode::Internal, "model task failed"),
    }
}

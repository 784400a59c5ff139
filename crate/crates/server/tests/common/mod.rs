#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, Response};
use http_body_util::BodyExt;
use mx_core::models::{DetectorModel, DetectorParams, SentimentModel, SentimentWeights};
use mx_core::{ModelMetadata, Servable};
use mx_server::service::DEFAULT_MAX_BODY_BYTES;
use mx_server::{spawn_server, ModelService, RunningServer};
use tower::ServiceExt;

pub fn metadata(id: &str, name: &str, model_type: &str) -> ModelMetadata {
    ModelMetadata {
        id: id.into(),
        name: name.into(),
        description: format!("{name} reference model"),
        model_type: model_type.into(),
        license: "Apache-2.0".into(),
        source: "local".into(),
    }
}

pub fn sentiment_model(id: &str) -> Arc<dyn Servable> {
    let weights = SentimentWeights {
        vocab: [("good".into(), 2.0), ("bad".into(), -2.0)].into(),
        bias: 0.0,
    };
    Arc::new(SentimentModel::new(
        metadata(id, "Sentiment", "text-classification"),
        weights,
    ))
}

pub fn detector_model(id: &str) -> Arc<dyn Servable> {
    Arc::new(DetectorModel::new(
        metadata(id, "Detector", "object-detection"),
        DetectorParams::default(),
    ))
}

pub fn sentiment_service() -> ModelService {
    ModelService::with_model(sentiment_model("text-sentiment"), DEFAULT_MAX_BODY_BYTES).unwrap()
}

pub fn detector_service() -> ModelService {
    ModelService::with_model(detector_model("object-detector"), DEFAULT_MAX_BODY_BYTES).unwrap()
}

pub async fn start(svc: &ModelService) -> RunningServer {
    start_at(svc, "127.0.0.1:0".parse().unwrap()).await
}

pub async fn start_at(svc: &ModelService, addr: SocketAddr) -> RunningServer {
    spawn_server(addr, svc.router()).await.unwrap()
}

/// 8x8 image with a bright 2x2 blob top-left and a dimmer one bottom-right.
pub fn two_blob_pgm() -> Vec<u8> {
    let mut px = [0u8; 64];
    for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        px[r * 8 + c] = 255;
    }
    for (r, c) in [(5, 6), (5, 7), (6, 6), (6, 7)] {
        px[r * 8 + c] = 204;
    }
    let mut out = b"P5\n8 8\n255\n".to_vec();
    out.extend_from_slice(&px);
    out
}

pub fn multipart(field: &str, data: &[u8]) -> (String, Vec<u8>) {
    let boundary = "mxboundary7f3a";
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"{field}\"; filename=\"img.pgm\"\r\n\
         Content-Type: image/x-portable-graymap\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(data);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    (format!("multipart/form-data; boundary={boundary}"), body)
}

pub struct Reply {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("not JSON ({e}): {:?}", String::from_utf8_lossy(&self.body))
        })
    }
}

pub async fn send(router: axum::Router, req: Request<Body>) -> Reply {
    let res: Response<Body> = router.oneshot(req).await.unwrap();
    let status = res.status().as_u16();
    let content_type = res
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string());
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        content_type,
        body,
    }
}

pub fn get(path: &str) -> Request<Body> {
    Request::get(path).body(Body::empty()).unwrap()
}

pub fn post(path: &str, content_type: &str, body: impl Into<Body>) -> Request<Body> {
    Request::post(path)
        .header("content-type", content_type)
        .body(body.into())
        .unwrap()
}

#![allow(dead_code)]

use std::path::Path;
use std::process::Stdio;
use std::sync::Arc;
use std::time::{Duration, Instant};

use mx_core::models::{DetectorModel, DetectorParams, SentimentModel, SentimentWeights};
use mx_core::{ModelMetadata, Servable};
use tokio::io::{AsyncBufReadExt, BufReader};
use tokio::process::{Child, Command};

pub const MX: &str = env!("CARGO_BIN_EXE_mx");

pub fn metadata(id: &str, name: &str, model_type: &str) -> ModelMetadata {
    ModelMetadata {
        id: id.into(),
        name: name.into(),
        description: format!("{name} test model"),
        model_type: model_type.into(),
        license: "Apache-2.0".into(),
        source: "local".into(),
    }
}

pub fn fixture_weights() -> SentimentWeights {
    SentimentWeights {
        vocab: [("good".into(), 2.0), ("bad".into(), -2.0)].into(),
        bias: 0.0,
    }
}

pub fn sentiment_model(id: &str) -> Arc<dyn Servable> {
    Arc::new(SentimentModel::new(
        metadata(id, "Sentiment", "text-classification"),
        fixture_weights(),
    ))
}

pub fn detector_model(id: &str) -> Arc<dyn Servable> {
    Arc::new(DetectorModel::new(
        metadata(id, "Detector", "object-detection"),
        DetectorParams::default(),
    ))
}

/// 8x8 P5 image with two 2x2 blobs of different brightness.
pub fn two_blob_pgm() -> Vec<u8> {
    let mut px = [0u8; 64];
    for i in [0, 1, 8, 9] {
        px[i] = 255;
    }
    for i in [46, 47, 54, 55] {
        px[i] = 204;
    }
    let mut out = b"P5\n8 8\n255\n".to_vec();
    out.extend_from_slice(&px);
    out
}

pub fn multipart(field: &str, data: &[u8]) -> (String, Vec<u8>) {
    let boundary = "acceptboundary42";
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"{field}\"; filename=\"x.pgm\"\r\n\
         Content-Type: image/x-portable-graymap\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(data);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    (format!("multipart/form-data; boundary={boundary}"), body)
}

/// A `mx serve` child process; killed on drop.
pub struct Served {
    pub child: Child,
    pub url: String,
}

/// Starts `mx serve` on an ephemeral port and waits until `/health` is 200.
pub async fn serve_dir(dir: &Path) -> Result<Served, String> {
    let mut child = Command::new(MX)
        .args(["serve", "--host", "127.0.0.1", "--port", "0", "--model-dir"])
        .arg(dir)
        .env_remove("PORT")
        .env_remove("MODEL_DIR")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .kill_on_drop(true)
        .spawn()
        .map_err(|e| format!("spawn mx serve: {e}"))?;
    let stdout = child.stdout.take().expect("piped stdout");
    let mut lines = BufReader::new(stdout).lines();
    let line = tokio::time::timeout(Duration::from_secs(10), lines.next_line())
        .await
        .map_err(|_| "mx serve did not announce its address".to_string())?
        .map_err(|e| e.to_string())?
        .ok_or("mx serve exited before listening")?;
    let url = line
        .strip_prefix("listening on ")
        .ok_or_else(|| format!("unexpected first line {line:?}"))?
        .to_string();
    let client = mx_server::http_client();
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        if let Ok(r) = client.get(format!("{url}/health")).send().await {
            if r.status() == 200 {
                break;
            }
        }
        if Instant::now() > deadline {
            return Err(format!("{url} never became ready"));
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    Ok(Served { child, url })
}

pub async fn mx(args: &[&str]) -> std::process::Output {
    Command::new(MX)
        .args(args)
        .env_remove("REGISTRY_URL")
        .output()
        .await
        .expect("run mx")
}

/// (status, content type, body) of a raw POST.
pub async fn post(url: &str, content_type: &str, body: Vec<u8>) -> (u16, String, Vec<u8>) {
    let res = mx_server::http_client()
        .post(url)
        .header("content-type", content_type)
        .body(body)
        .send()
        .await
        .expect("post");
    let status = res.status().as_u16();
    let ct = res
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    (status, ct, res.bytes().await.unwrap().to_vec())
}

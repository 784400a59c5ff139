//! `mx validate`: checks a live service against the standardized model API.
//!
//! Checks, in order:
//!
//! - `health`: `GET /health` is 200 `{"status":"ok"}`
//! - `metadata`: `GET /model/metadata` is valid metadata with all six fields
//! - `openapi`: `GET /swagger.json` is an OpenAPI 3 document with `/model/predict`
//! - `predict-sample`: a sample request yields an ok-envelope with one
//!   prediction per instance
//! - `predict-malformed`: a malformed body yields an error envelope whose
//!   code equals the HTTP status

use std::fmt;
use std::path::Path;
use std::time::Duration;

use mx_core::io::{mime_essence, APPLICATION_JSON, IMAGE_PGM, MULTIPART_FORM_DATA};
use mx_core::{ModelMetadata, PredictionEnvelope};
use serde::Serialize;
use serde_json::Value;

const METADATA_KEYS: [&str; 6] = ["id", "name", "description", "model_type", "license", "source"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check_id: &'static str,
    pub description: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub target_url: String,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ConformanceReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for ConformanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Conformance report for {}", self.target_url)?;
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "  [{mark}] {:<18} {}", c.check_id, c.description)?;
            if !c.detail.is_empty() {
                writeln!(f, "         {}", c.detail)?;
            }
        }
        let ok = self.checks.iter().filter(|c| c.passed).count();
        write!(
            f,
            "Result: {} ({ok}/{} checks passed)",
            if self.passed { "PASSED" } else { "FAILED" },
            self.checks.len()
        )
    }
}

/// A predict request and the number of predictions it must produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub content_type: String,
    pub body: Vec<u8>,
    pub instances: usize,
}

impl Sample {
    pub fn text() -> Self {
        Sample {
            content_type: APPLICATION_JSON.into(),
            body: br#"{"text":["a good movie","a bad plot"]}"#.to_vec(),
            instances: 2,
        }
    }

    pub fn image() -> Self {
        Sample {
            content_type: IMAGE_PGM.into(),
            body: crate::scaffold::SAMPLE_PGM.as_bytes().to_vec(),
            instances: 1,
        }
    }

    /// `.json` files must hold a `{"text": [...]}` batch; `.pgm` files an image.
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let body = std::fs::read(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let v: Value = serde_json::from_slice(&body)?;
                let n = v["text"]
                    .as_array()
                    .ok_or_else(|| anyhow::anyhow!("{}: expected {{\"text\": [...]}}", path.display()))?
                    .len();
                Ok(Sample {
                    content_type: APPLICATION_JSON.into(),
                    body,
                    instances: n,
                })
            }
            Some("pgm") => Ok(Sample {
                content_type: IMAGE_PGM.into(),
                body,
                instances: 1,
            }),
            _ => anyhow::bail!("{}: sample must be a .json or .pgm file", path.display()),
        }
    }

    /// A body of the same content type that no conforming service accepts.
    fn malformed(&self) -> Sample {
        let body = match mime_essence(&self.content_type).as_str() {
            APPLICATION_JSON => b"{\"text\": [".to_vec(),
            _ => b"P5 not-an-image".to_vec(),
        };
        Sample {
            content_type: self.content_type.clone(),
            body,
            instances: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    /// Overrides the sample chosen from the service's OpenAPI document.
    pub sample: Option<Sample>,
    pub timeout: Duration,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            sample: None,
            timeout: Duration::from_secs(10),
        }
    }
}

struct Probe {
    client: reqwest::Client,
    base: String,
    timeout: Duration,
}

struct Reply {
    status: u16,
    content_type: String,
    body: Vec<u8>,
}

impl Probe {
    async fn get(&self, path: &str) -> Result<Reply, String> {
        self.finish(self.client.get(format!("{}{path}", self.base))).await
    }

    async fn post(&self, path: &str, sample: &Sample) -> Result<Reply, String> {
        let req = self
            .client
            .post(format!("{}{path}", self.base))
            .header(reqwest::header::CONTENT_TYPE, &sample.content_type)
            .body(sample.body.clone());
        self.finish(req).await
    }

    async fn finish(&self, req: reqwest::RequestBuilder) -> Result<Reply, String> {
        let res = req
            .timeout(self.timeout)
            .send()
            .await
            .map_err(|e| format!("request failed: {e}"))?;
        let status = res.status().as_u16();
        let content_type = res
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_string();
        let body = res
            .bytes()
            .await
            .map_err(|e| format!("reading body: {e}"))?
            .to_vec();
        Ok(Reply {
            status,
            content_type,
            body,
        })
    }
}

fn json_reply(reply: &Reply) -> Result<Value, String> {
    if mime_essence(&reply.content_type) != APPLICATION_JSON {
        return Err(format!("content type is {:?}, expected application/json", reply.content_type));
    }
    serde_json::from_slice(&reply.body).map_err(|e| format!("body is not JSON: {e}"))
}

fn check_health(reply: Result<Reply, String>) -> Result<String, String> {
    let reply = reply?;
    if reply.status != 200 {
        return Err(format!("status {}", reply.status));
    }
    let body = json_reply(&reply)?;
    if body != serde_json::json!({"status": "ok"}) {
        return Err(format!("unexpected body {body}"));
    }
    Ok(String::new())
}

fn check_metadata(reply: Result<Reply, String>) -> Result<ModelMetadata, String> {
    let reply = reply?;
    if reply.status != 200 {
        return Err(format!("status {}", reply.status));
    }
    let body = json_reply(&reply)?;
    let obj = body.as_object().ok_or("metadata is not a JSON object")?;
    let missing: Vec<_> = METADATA_KEYS.iter().filter(|k| !obj.contains_key(**k)).collect();
    if !missing.is_empty() {
        return Err(format!("missing keys {missing:?}"));
    }
    let meta: ModelMetadata = serde_json::from_value(body).map_err(|e| e.to_string())?;
    meta.validate().map_err(|v| {
        v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
    })?;
    Ok(meta)
}

fn check_openapi(reply: Result<Reply, String>, meta: Option<&ModelMetadata>) -> Result<Value, String> {
    let reply = reply?;
    if reply.status != 200 {
        return Err(format!("status {}", reply.status));
    }
    let doc = json_reply(&reply)?;
    let version = doc["openapi"].as_str().unwrap_or("");
    if !version.starts_with("3.") {
        return Err(format!("openapi version {version:?} is not 3.x"));
    }
    if doc["paths"].get("/model/predict").is_none() {
        return Err("paths lacks /model/predict".into());
    }
    if let Some(m) = meta {
        if doc["info"]["title"] != m.name.as_str() {
            return Err(format!("info.title {} differs from metadata name {:?}", doc["info"]["title"], m.name));
        }
    }
    Ok(doc)
}

/// Picks a built-in sample matching what the OpenAPI document says the
/// predict endpoint accepts.
fn sample_for(doc: Option<&Value>) -> Sample {
    let content = doc.and_then(|d| d["paths"]["/model/predict"]["post"]["requestBody"]["content"].as_object());
    match content {
        Some(c) if c.keys().any(|k| mime_essence(k) == APPLICATION_JSON) => Sample::text(),
        Some(c)
            if c.keys()
                .any(|k| matches!(mime_essence(k).as_str(), IMAGE_PGM | MULTIPART_FORM_DATA)) =>
        {
            Sample::image()
        }
        _ => Sample::text(),
    }
}

fn check_predict(reply: Result<Reply, String>, sample: &Sample) -> Result<String, String> {
    let reply = reply?;
    if reply.status != 200 {
        return Err(format!("status {}: {}", reply.status, String::from_utf8_lossy(&reply.body)));
    }
    let body = json_reply(&reply)?;
    let env: PredictionEnvelope =
        serde_json::from_value(body).map_err(|e| format!("not a prediction envelope: {e}"))?;
    let predictions = env.predictions().ok_or("status is not \"ok\"")?;
    if predictions.len() != sample.instances {
        return Err(format!(
            "{} predictions for {} instances",
            predictions.len(),
            sample.instances
        ));
    }
    Ok(format!("{} predictions", predictions.len()))
}

fn check_malformed(reply: Result<Reply, String>) -> Result<String, String> {
    let reply = reply?;
    if !(400..500).contains(&reply.status) {
        return Err(format!("status {}, expected a 4xx error", reply.status));
    }
    let body = json_reply(&reply)?;
    let env: PredictionEnvelope =
        serde_json::from_value(body).map_err(|e| format!("not an error envelope: {e}"))?;
    let err = env.error_body().ok_or("status is not \"error\"")?;
    if err.code.as_u16() != reply.status {
        return Err(format!("error.code {} differs from HTTP status {}", err.code, reply.status));
    }
    Ok(format!("status {}", reply.status))
}

fn record<T>(
    checks: &mut Vec<Check>,
    check_id: &'static str,
    description: &'static str,
    result: &Result<T, String>,
    ok_detail: impl FnOnce(&T) -> String,
) {
    let (passed, detail) = match result {
        Ok(v) => (true, ok_detail(v)),
        Err(e) => (false, e.clone()),
    };
    checks.push(Check {
        check_id,
        description,
        passed,
        detail,
    });
}

pub async fn validate_service(url: &str, opts: &ValidateOptions) -> ConformanceReport {
    let probe = Probe {
        client: mx_server::http_client(),
        base: url.trim_end_matches('/').to_string(),
        timeout: opts.timeout,
    };
    let mut checks = Vec::new();

    let health = check_health(probe.get("/health").await);
    record(&mut checks, "health", "GET /health returns 200 {\"status\":\"ok\"}", &health, Clone::clone);

    let meta = check_metadata(probe.get("/model/metadata").await);
    record(&mut checks, "metadata", "GET /model/metadata returns valid metadata", &meta, |m| {
        format!("id {:?}", m.id)
    });

    let doc = check_openapi(probe.get("/swagger.json").await, meta.as_ref().ok());
    record(&mut checks, "openapi", "GET /swagger.json is OpenAPI 3 with /model/predict", &doc, |_| {
        String::new()
    });

    let sample = opts.sample.clone().unwrap_or_else(|| sample_for(doc.as_ref().ok()));
    let predict = check_predict(probe.post("/model/predict", &sample).await, &sample);
    record(
        &mut checks,
        "predict-sample",
        "sample request returns an ok-envelope aligned with the batch",
        &predict,
        Clone::clone,
    );

    let malformed = check_malformed(probe.post("/model/predict", &sample.malformed()).await);
    record(
        &mut checks,
        "predict-malformed",
        "malformed request returns an error envelope matching the status",
        &malformed,
        Clone::clone,
    );

    let passed = checks.iter().all(|c| c.passed);
    ConformanceReport {
        target_url: url.to_string(),
        checks,
        passed,
    }
}

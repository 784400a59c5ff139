use std::time::Duration;

use chrono::Utc;
use mx_core::ModelMetadata;

use super::record::{ModelRecord, ProbeOutcome, RegistryConfig};

/// Fetches and validates `{base_url}/model/metadata`.
pub async fn probe_metadata(client: &reqwest::Client, base_url: &str, timeout: Duration) -> ProbeOutcome {
    match fetch(client, base_url, timeout).await {
        Ok(m) => ProbeOutcome::Success(m),
        Err(e) => ProbeOutcome::Failure(e),
    }
}

async fn fetch(client: &reqwest::Client, base_url: &str, timeout: Duration) -> Result<ModelMetadata, String> {
    let res = client
        .get(format!("{base_url}/model/metadata"))
        .timeout(timeout)
        .send()
        .await
        .map_err(|e| format!("request failed: {e}"))?;
    if !res.status().is_success() {
        return Err(format!("metadata endpoint returned {}", res.status()));
    }
    let body = res.bytes().await.map_err(|e| format!("reading body: {e}"))?;
    let metadata: ModelMetadata =
        serde_json::from_slice(&body).map_err(|e| format!("invalid metadata: {e}"))?;
    if let Err(v) = metadata.validate() {
        return Err(format!("invalid metadata: {}", v[0]));
    }
    Ok(metadata)
}

/// Probes the record's service and returns the record advanced by one step
/// of the health state machine. A service that answers with another
/// model's id counts as a failed probe.
pub async fn poll_health(client: &reqwest::Client, record: &ModelRecord, cfg: &RegistryConfig) -> ModelRecord {
    let outcome = match probe_metadata(client, &record.url, cfg.probe_timeout).await {
        ProbeOutcome::Success(m) if m.id != record.id => {
            ProbeOutcome::Failure(format!("service reports id {:?}", m.id))
        }
        other => other,
    };
    record.apply_probe(outcome, cfg.failure_threshold, Utc::now())
}

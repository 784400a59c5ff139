use std::path::PathBuf;
use std::time::Duration;

use chrono::{DateTime, Utc};
use mx_core::ModelMetadata;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Health {
    Unknown,
    Healthy,
    Unhealthy,
}

/// One catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub id: String,
    /// Base URL of the model service, without a trailing slash.
    pub url: String,
    /// Last metadata fetched from the service; absent if it was never reachable.
    pub metadata: Option<ModelMetadata>,
    pub health: Health,
    pub consecutive_failures: u32,
    pub last_checked: DateTime<Utc>,
}

/// Result of probing a service's metadata endpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeOutcome {
    Success(ModelMetadata),
    Failure(String),
}

impl ModelRecord {
    /// Health state machine. Success is immediately healthy and clears the
    /// failure counter. A failure increments the counter; the record turns
    /// unhealthy once the counter reaches `failure_threshold`, otherwise it
    /// keeps its previous health.
    pub fn apply_probe(&self, outcome: ProbeOutcome, failure_threshold: u32, now: DateTime<Utc>) -> ModelRecord {
        let mut next = self.clone();
        next.last_checked = now;
        match outcome {
            ProbeOutcome::Success(metadata) => {
                next.metadata = Some(metadata);
                next.health = Health::Healthy;
                next.consecutive_failures = 0;
            }
            ProbeOutcome::Failure(_) => {
                next.consecutive_failures = self.consecutive_failures.saturating_add(1);
                if next.consecutive_failures >= failure_threshold {
                    next.health = Health::Unhealthy;
                }
            }
        }
        next
    }

    /// State as restored from the store: health is not trusted across restarts.
    pub fn reset_health(mut self) -> ModelRecord {
        self.health = Health::Unknown;
        self.consecutive_failures = 0;
        self
    }
}

#[derive(Debug, Clone)]
pub struct RegistryConfig {
    pub poll_interval: Duration,
    pub failure_threshold: u32,
    pub probe_timeout: Duration,
    pub store_path: PathBuf,
    /// Upper bound on a proxied predict call.
    pub proxy_timeout: Duration,
    pub max_proxy_body_bytes: usize,
}

impl RegistryConfig {
    pub fn new(store_path: impl Into<PathBuf>) -> Self {
        RegistryConfig {
            poll_interval: Duration::from_secs(30),
            failure_threshold: 3,
            probe_timeout: Duration::from_secs(5),
            store_path: store_path.into(),
            proxy_timeout: Duration::from_secs(60),
            max_proxy_body_bytes: 16 * 1024 * 1024,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.poll_interval.is_zero() {
            return Err("poll_interval must be positive".into());
        }
        if self.failure_threshold < 1 {
            return Err("failure_threshold must be at least 1".into());
        }
        if self.probe_timeout.is_zero() {
            return Err("probe_timeout must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ModelMetadata {
        ModelMetadata {
            id: "m".into(),
            name: "M".into(),
            description: "d".into(),
            model_type: "t".into(),
            license: "MIT".into(),
            source: "local".into(),
        }
    }

    fn record(health: Health) -> ModelRecord {
        ModelRecord {
            id: "m".into(),
            url: "http://127.0.0.1:1".into(),
            metadata: None,
            health,
            consecutive_failures: 0,
            last_checked: DateTime::<Utc>::UNIX_EPOCH,
        }
    }

    fn fail() -> ProbeOutcome {
        ProbeOutcome::Failure("refused".into())
    }

    #[test]
    fn three_failures_make_unhealthy() {
        let now = Utc::now();
        let mut r = record(Health::Healthy);
        let mut seen = Vec::new();
        for _ in 0..3 {
            r = r.apply_probe(fail(), 3, now);
            seen.push((r.health, r.consecutive_failures));
        }
        assert_eq!(
            seen,
            [(Health::Healthy, 1), (Health::Healthy, 2), (Health::Unhealthy, 3)]
        );
        assert_eq!(r.last_checked, now);
        let r = r.apply_probe(ProbeOutcome::Success(meta()), 3, now);
        assert_eq!((r.health, r.consecutive_failures), (Health::Healthy, 0));
        assert_eq!(r.metadata, Some(meta()));
    }

    #[test]
    fn two_failures_then_success_stays_healthy() {
        let now = Utc::now();
        let r = record(Health::Healthy)
            .apply_probe(fail(), 3, now)
            .apply_probe(fail(), 3, now);
        assert_eq!(r.health, Health::Healthy);
        let r = r.apply_probe(ProbeOutcome::Success(meta()), 3, now);
        assert_eq!((r.health, r.consecutive_failures), (Health::Healthy, 0));
    }

    #[test]
    fn unknown_stays_unknown_below_threshold() {
        let r = record(Health::Unknown).apply_probe(fail(), 2, Utc::now());
        assert_eq!((r.health, r.consecutive_failures), (Health::Unknown, 1));
        let r = r.apply_probe(fail(), 2, Utc::now());
        assert_eq!(r.health, Health::Unhealthy);
    }

    #[test]
    fn config_validation() {
        let mut c = RegistryConfig::new("x.json");
        assert!(c.validate().is_ok());
        c.failure_threshold = 0;
        assert!(c.validate().is_err());
        let mut c = RegistryConfig::new("x.json");
        c.poll_interval = Duration::ZERO;
        assert!(c.validate().is_err());
    }
}

//! The model exchange: a catalog of running model services with metadata
//! snapshots, a background health poller and a predict proxy.
//!
//! Reads go through a short-lived `RwLock`. Every mutation is serialized by
//! a single async writer lock and persisted before it becomes visible.
//! Network probes never run while either lock is held.

pub mod api;
mod probe;
mod record;
pub mod store;

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use futures::future::join_all;
use tokio::sync::{broadcast, Mutex};
use tokio::task::JoinHandle;

pub use api::router;
pub use probe::{poll_health, probe_metadata};
pub use record::{Health, ModelRecord, ProbeOutcome, RegistryConfig};
pub use store::StoreError;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("model {0:?} is already registered")]
    Conflict(String),
    #[error("service at {url} reports id {found:?}, expected {expected:?}")]
    IdMismatch {
        expected: String,
        found: String,
        url: String,
    },
    #[error("invalid model id: {0}")]
    InvalidId(String),
    #[error("invalid url {0:?}: expected an http(s) base URL")]
    InvalidUrl(String),
    #[error("model {0:?} is not registered")]
    NotFound(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Emitted after each health poll of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct PollEvent {
    pub id: String,
    pub health: Health,
    pub consecutive_failures: u32,
    pub at: DateTime<Utc>,
}

pub struct Registry {
    cfg: RegistryConfig,
    client: reqwest::Client,
    records: RwLock<BTreeMap<String, ModelRecord>>,
    writer: Mutex<()>,
    events: broadcast::Sender<PollEvent>,
}

impl Registry {
    /// Loads the catalog from `cfg.store_path`. Restored records start with
    /// unknown health.
    pub fn open(cfg: RegistryConfig) -> Result<Arc<Registry>, StoreError> {
        let records = store::load(&cfg.store_path)?
            .into_iter()
            .map(|r| (r.id.clone(), r.reset_health()))
            .collect();
        let (events, _) = broadcast::channel(1024);
        Ok(Arc::new(Registry {
            cfg,
            client: crate::http_client(),
            records: RwLock::new(records),
            writer: Mutex::new(()),
            events,
        }))
    }

    pub fn config(&self) -> &RegistryConfig {
        &self.cfg
    }

    pub(crate) fn client(&self) -> &reqwest::Client {
        &self.client
    }

    pub fn subscribe(&self) -> broadcast::Receiver<PollEvent> {
        self.events.subscribe()
    }

    /// All records, sorted by id.
    pub fn list(&self) -> Vec<ModelRecord> {
        self.records.read().expect("catalog lock").values().cloned().collect()
    }

    pub fn get(&self, id: &str) -> Option<ModelRecord> {
        self.records.read().expect("catalog lock").get(id).cloned()
    }

    fn contains(&self, id: &str) -> bool {
        self.records.read().expect("catalog lock").contains_key(id)
    }

    /// Applies `f` to a copy of the catalog, persists it, then publishes it.
    /// Caller must hold the writer lock.
    async fn commit<T>(
        &self,
        f: impl FnOnce(&mut BTreeMap<String, ModelRecord>) -> Result<T, RegistryError>,
    ) -> Result<T, RegistryError> {
        let mut next = self.records.read().expect("catalog lock").clone();
        let out = f(&mut next)?;
        let path = self.cfg.store_path.clone();
        let snapshot: Vec<ModelRecord> = next.values().cloned().collect();
        tokio::task::spawn_blocking(move || store::save(&path, &snapshot))
            .await
            .expect("store task")?;
        *self.records.write().expect("catalog lock") = next;
        Ok(out)
    }

    /// Probes `{url}/model/metadata` and adds the service to the catalog:
    /// healthy with a metadata snapshot if the probe succeeds, unknown
    /// otherwise.
    pub async fn register(&self, id: &str, url: &str) -> Result<ModelRecord, RegistryError> {
        mx_core::metadata::check_id(id).map_err(RegistryError::InvalidId)?;
        let url = normalize_url(url)?;
        if self.contains(id) {
            return Err(RegistryError::Conflict(id.into()));
        }

        let record = match probe_metadata(&self.client, &url, self.cfg.probe_timeout).await {
            ProbeOutcome::Success(m) if m.id != id => {
                return Err(RegistryError::IdMismatch {
                    expected: id.into(),
                    found: m.id,
                    url,
                })
            }
            ProbeOutcome::Success(m) => ModelRecord {
                id: id.into(),
                url,
                metadata: Some(m),
                health: Health::Healthy,
                consecutive_failures: 0,
                last_checked: Utc::now(),
            },
            ProbeOutcome::Failure(reason) => {
                tracing::warn!(id, %url, %reason, "registration probe failed");
                ModelRecord {
                    id: id.into(),
                    url,
                    metadata: None,
                    health: Health::Unknown,
                    consecutive_failures: 0,
                    last_checked: Utc::now(),
                }
            }
        };

        let _w = self.writer.lock().await;
        self.commit(|map| {
            if map.contains_key(id) {
                return Err(RegistryError::Conflict(id.into()));
            }
            map.insert(id.into(), record.clone());
            Ok(record)
        })
        .await
    }

    pub async fn deregister(&self, id: &str) -> Result<ModelRecord, RegistryError> {
        let _w = self.writer.lock().await;
        self.commit(|map| map.remove(id).ok_or_else(|| RegistryError::NotFound(id.into())))
            .await
    }

    /// Probes every record once, concurrently, and applies the results.
    /// Returns the updated records.
    pub async fn poll_once(&self) -> Vec<ModelRecord> {
        let snapshot = self.list();
        let polled = join_all(
            snapshot
                .iter()
                .map(|r| poll_health(&self.client, r, &self.cfg)),
        )
        .await;

        let _w = self.writer.lock().await;
        let mut metadata_changed = false;
        let mut updated = Vec::with_capacity(polled.len());
        {
            let mut map = self.records.write().expect("catalog lock");
            for (before, after) in snapshot.iter().zip(polled) {
                // Skip records deregistered (or re-registered elsewhere) mid-poll.
                let Some(current) = map.get_mut(&before.id) else { continue };
                if current.url != before.url {
                    continue;
                }
                metadata_changed |= current.metadata != after.metadata;
                *current = after.clone();
                updated.push(after);
            }
        }
        for r in &updated {
            if r.health == Health::Unhealthy && r.consecutive_failures == self.cfg.failure_threshold {
                tracing::warn!(id = %r.id, url = %r.url, "model service marked unhealthy");
            }
            let _ = self.events.send(PollEvent {
                id: r.id.clone(),
                health: r.health,
                consecutive_failures: r.consecutive_failures,
                at: r.last_checked,
            });
        }
        if metadata_changed {
            let path = self.cfg.store_path.clone();
            let snapshot = self.list();
            match tokio::task::spawn_blocking(move || store::save(&path, &snapshot)).await {
                Ok(Ok(())) => {}
                Ok(Err(e)) => tracing::error!(error = %e, "failed to persist catalog"),
                Err(e) => tracing::error!(error = %e, "store task failed"),
            }
        }
        updated
    }

    /// Polls every `poll_interval` until the returned handle is aborted.
    pub fn spawn_poller(self: &Arc<Self>) -> JoinHandle<()> {
        let registry = Arc::clone(self);
        tokio::spawn(async move {
            let mut ticker = tokio::time::interval(registry.cfg.poll_interval);
            ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
            ticker.tick().await;
            loop {
                ticker.tick().await;
                registry.poll_once().await;
            }
        })
    }
}

fn normalize_url(url: &str) -> Result<String, RegistryError> {
    let parsed = reqwest::Url::parse(url).map_err(|_| RegistryError::InvalidUrl(url.into()))?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host().is_none() {
        return Err(RegistryError::InvalidUrl(url.into()));
    }
    Ok(url.trim_end_matches('/').to_string())
}

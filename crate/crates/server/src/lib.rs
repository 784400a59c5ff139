//! HTTP surfaces: the single-model service exposing the standardized
//! endpoint set, and the registry that catalogs, health-checks and proxies
//! to running model services.

pub mod access_log;
pub mod negotiate;
pub mod registry;
pub mod response;
pub mod runtime;
pub mod service;

pub use mx_core;
pub use registry::{Health, ModelRecord, Registry, RegistryConfig, RegistryError};
pub use runtime::{spawn_server, RunningServer};
pub use service::{ModelService, ServiceConfig};

/// HTTP client used for probes, proxying and conformance checks. Ignores
/// proxy environment variables: model services are addressed directly.
pub fn http_client() -> reqwest::Client {
    reqwest::Client::builder()
        .no_proxy()
        .build()
        .expect("http client construction")
}

//! Long-running commands: `mx serve` and `mx registry serve`.

use std::future::Future;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use anyhow::Context;
use mx_core::model_dir::{load_model_dir, read_service_file};
use mx_server::registry::{api, Registry, RegistryConfig};
use mx_server::runtime::serve;
use mx_server::service::{ModelService, DEFAULT_MAX_BODY_BYTES, DEFAULT_PORT, MIN_MAX_BODY_BYTES};
use tokio::net::TcpListener;

/// Flag or env values; `None` falls back to `service.toml`, then defaults.
#[derive(Debug, Clone)]
pub struct ServeArgs {
    pub model_dir: PathBuf,
    pub host: IpAddr,
    pub port: Option<u16>,
    pub max_body_bytes: Option<usize>,
}

/// Resolves the bind address and body cap without loading the model.
pub fn resolve(args: &ServeArgs) -> anyhow::Result<(SocketAddr, usize)> {
    let defaults = read_service_file(&args.model_dir)?
        .map(|f| f.service)
        .unwrap_or_default();
    let port = args.port.or(defaults.port).unwrap_or(DEFAULT_PORT);
    let max = args
        .max_body_bytes
        .or(defaults.max_body_bytes)
        .unwrap_or(DEFAULT_MAX_BODY_BYTES);
    if max < MIN_MAX_BODY_BYTES {
        anyhow::bail!("max body size must be at least {MIN_MAX_BODY_BYTES} bytes, got {max}");
    }
    Ok((SocketAddr::new(args.host, port), max))
}

async fn bind(addr: SocketAddr) -> anyhow::Result<TcpListener> {
    TcpListener::bind(addr)
        .await
        .with_context(|| format!("cannot bind {addr}"))
}

fn announce(listener: &TcpListener) -> anyhow::Result<SocketAddr> {
    let addr = listener.local_addr()?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "listening on http://{addr}")?;
    out.flush()?;
    Ok(addr)
}

/// Binds first so `/health` can answer 503 while weights load. If loading
/// fails the server stops and the error is returned.
pub async fn run_service(
    args: ServeArgs,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let (addr, max) = resolve(&args)?;
    let listener = bind(addr).await?;
    announce(&listener)?;
    let service = ModelService::new(max);
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, service.router(), async move {
        tokio::select! {
            _ = shutdown => {}
            _ = stop_rx => {}
        }
    }));

    let dir = args.model_dir.clone();
    let loaded = tokio::task::spawn_blocking(move || load_model_dir(&dir)).await?;
    match loaded {
        Ok(m) => {
            service.install(m.model)?;
            tracing::info!(template = %m.template, "model loaded");
        }
        Err(e) => {
            let _ = stop_tx.send(());
            let _ = server.await;
            return Err(anyhow::Error::new(e).context("cannot load model"));
        }
    }
    server.await??;
    drop(stop_tx);
    Ok(())
}

pub async fn run_registry(
    cfg: RegistryConfig,
    addr: SocketAddr,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    cfg.validate().map_err(anyhow::Error::msg)?;
    let registry = Registry::open(cfg).context("cannot open registry store")?;
    let listener = bind(addr).await?;
    announce(&listener)?;
    let poller = registry.spawn_poller();
    let res = serve(listener, api::router(registry), shutdown).await;
    poller.abort();
    res.map_err(Into::into)
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutting down");
}

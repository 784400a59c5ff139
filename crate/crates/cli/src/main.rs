use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mx_cli::run::{run_registry, run_service, shutdown_signal, ServeArgs};
use mx_cli::{scaffold, validate_service, Sample, ValidateOptions};
use mx_core::model_dir::Template;
use mx_server::registry::RegistryConfig;
use mx_server::service::LogLevel;
use mx_server::ModelRecord;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "mx", version, about = "Scaffold, serve, register and validate model services")]
struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, env = "LOG_LEVEL", default_value = "info")]
    log_level: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a model service project from a template.
    New {
        /// text-classifier or object-detector
        template: Template,
        id: String,
        /// Defaults to ./<id>
        dir: Option<PathBuf>,
    },
    /// Serve a model directory over HTTP.
    Serve {
        #[arg(long, env = "MODEL_DIR", default_value = ".")]
        model_dir: PathBuf,
        #[arg(long, default_value = "0.0.0.0")]
        host: IpAddr,
        #[arg(long, env = "PORT")]
        port: Option<u16>,
        #[arg(long, env = "MAX_BODY_BYTES")]
        max_body_bytes: Option<usize>,
    },
    /// Run or talk to a model registry.
    Registry {
        #[command(subcommand)]
        command: RegistryCommand,
    },
    /// Check a running service against the model API.
    Validate {
        url: String,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        /// Sample request (.json or .pgm) instead of the built-in one.
        #[arg(long)]
        sample: Option<PathBuf>,
        /// Per-request timeout in seconds.
        #[arg(long, default_value_t = 10.0)]
        timeout: f64,
    },
}

#[derive(Subcommand)]
enum RegistryCommand {
    /// Run the registry server.
    Serve {
        #[arg(long, env = "REGISTRY_STORE", default_value = "registry.json")]
        store: PathBuf,
        #[arg(long, default_value = "0.0.0.0")]
        host: IpAddr,
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        /// Seconds between health polls.
        #[arg(long, default_value_t = 30.0)]
        poll_interval: f64,
        #[arg(long, default_value_t = 3)]
        failure_threshold: u32,
        /// Seconds before a health probe gives up.
        #[arg(long, default_value_t = 5.0)]
        probe_timeout: f64,
    },
    /// Register a running model service.
    Register {
        id: String,
        url: String,
        #[arg(long, env = "REGISTRY_URL", default_value = "http://127.0.0.1:8080")]
        registry: String,
    },
    /// List registered models.
    List {
        #[arg(long, env = "REGISTRY_URL", default_value = "http://127.0.0.1:8080")]
        registry: String,
        #[arg(long)]
        json: bool,
    },
    /// Remove a model from the registry.
    Remove {
        id: String,
        #[arg(long, env = "REGISTRY_URL", default_value = "http://127.0.0.1:8080")]
        registry: String,
    },
}

fn seconds(s: f64, what: &str) -> anyhow::Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| anyhow::anyhow!("{what} must be a non-negative number of seconds"))
}

async fn registry_call(req: reqwest::RequestBuilder) -> anyhow::Result<(u16, Value)> {
    let res = req.send().await.context("registry unreachable")?;
    let status = res.status().as_u16();
    let bytes = res.bytes().await?;
    let body = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).context("registry returned invalid JSON")?
    };
    if status >= 400 {
        let msg = body["error"]["message"].as_str().unwrap_or("request failed");
        anyhow::bail!("registry returned {status}: {msg}");
    }
    Ok((status, body))
}

fn print_records(records: &[ModelRecord]) {
    println!("{:<24} {:<10} {:<4} URL", "ID", "HEALTH", "FAIL");
    for r in records {
        println!(
            "{:<24} {:<10} {:<4} {}",
            r.id,
            serde_json::to_value(r.health).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            r.consecutive_failures,
            r.url
        );
    }
}

async fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::New { template, id, dir } => {
            let target = dir.unwrap_or_else(|| PathBuf::from(&id));
            let files = scaffold(template, &id, &target)?;
            println!("created {} ({} files)", target.display(), files.len());
            for f in files {
                println!("  {}", f.display());
            }
        }
        Command::Serve {
            model_dir,
            host,
            port,
            max_body_bytes,
        } => {
            let args = ServeArgs {
                model_dir,
                host,
                port,
                max_body_bytes,
            };
            run_service(args, shutdown_signal()).await?;
        }
        Command::Registry { command } => return registry(command).await,
        Command::Validate {
            url,
            json,
            sample,
            timeout,
        } => {
            let opts = ValidateOptions {
                sample: sample.as_deref().map(Sample::from_file).transpose()?,
                timeout: seconds(timeout, "--timeout")?,
            };
            let report = validate_service(&url, &opts).await;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
            return Ok(ExitCode::from(report.exit_code() as u8));
        }
    }
    Ok(ExitCode::SUCCESS)
}

async fn registry(command: RegistryCommand) -> anyhow::Result<ExitCode> {
    let client = mx_server::http_client();
    match command {
        RegistryCommand::Serve {
            store,
            host,
            port,
            poll_interval,
            failure_threshold,
            probe_timeout,
        } => {
            let mut cfg = RegistryConfig::new(store);
            cfg.poll_interval = seconds(poll_interval, "--poll-interval")?;
            cfg.failure_threshold = failure_threshold;
            cfg.probe_timeout = seconds(probe_timeout, "--probe-timeout")?;
            run_registry(cfg, SocketAddr::new(host, port), shutdown_signal()).await?;
        }
        RegistryCommand::Register { id, url, registry } => {
            let req = client
                .post(format!("{}/v1/models", registry.trim_end_matches('/')))
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(serde_json::json!({"id": id, "url": url}).to_string());
            let (_, body) = registry_call(req).await?;
            let record: ModelRecord = serde_json::from_value(body)?;
            println!("registered {} at {}", record.id, record.url);
        }
        RegistryCommand::List { registry, json } => {
            let req = client.get(format!("{}/v1/models", registry.trim_end_matches('/')));
            let (_, body) = registry_call(req).await?;
            if json {
                println!("{}", serde_json::to_string_pretty(&body)?);
            } else {
                print_records(&serde_json::from_value::<Vec<ModelRecord>>(body)?);
            }
        }
        RegistryCommand::Remove { id, registry } => {
            let req = client.delete(format!("{}/v1/models/{id}", registry.trim_end_matches('/')));
            registry_call(req).await?;
            println!("removed {id}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("MX_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(cli.log_level.as_str())),
        )
        .init();
    match run(cli).await {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

mod common;

use std::process::Stdio;
use std::time::Duration;

use common::*;
use mx_server::registry::{api, RegistryConfig};
use mx_server::{spawn_server, ModelService, Registry};
use serde_json::Value;
use tokio::io::{AsyncBufReadExt, BufReader};

fn text(out: &[u8]) -> String {
    String::from_utf8_lossy(out).into_owned()
}

#[tokio::test]
async fn new_refuses_non_empty_target_and_bad_id() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("keep.txt"), "x").unwrap();
    let out = mx(&["new", "text-classifier", "ok-id", dir.path().to_str().unwrap()]).await;
    assert!(!out.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);

    let target = dir.path().join("fresh");
    let out = mx(&["new", "text-classifier", "Bad Id", target.to_str().unwrap()]).await;
    assert!(!out.status.success());
    assert!(!target.exists());

    let out = mx(&["new", "captioner", "x", target.to_str().unwrap()]).await;
    assert!(!out.status.success());
}

#[tokio::test]
async fn new_then_serve_answers_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("reviews");
    let out = mx(&["new", "text-classifier", "reviews", target.to_str().unwrap()]).await;
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("metadata.json"));

    let served = serve_dir(&target).await.unwrap();
    let (status, ct, body) = post(
        &format!("{}/model/predict", served.url),
        "application/json",
        br#"{"text":["x","y"]}"#.to_vec(),
    )
    .await;
    assert_eq!((status, ct.as_str()), (200, "application/json"));
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["predictions"].as_array().unwrap().len(), 2);
    let meta: Value = mx_server::http_client()
        .get(format!("{}/model/metadata", served.url))
        .send()
        .await
        .unwrap()
        .json_value()
        .await;
    assert_eq!(meta["id"], "reviews");
}

#[tokio::test]
async fn serve_fails_without_weights() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("m");
    assert!(mx(&["new", "object-detector", "m", target.to_str().unwrap()]).await.status.success());
    std::fs::remove_file(target.join("weights.json")).unwrap();
    let out = tokio::time::timeout(
        Duration::from_secs(10),
        mx(&["serve", "--host", "127.0.0.1", "--port", "0", "--model-dir", target.to_str().unwrap()]),
    )
    .await
    .expect("serve should exit when the model cannot load");
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("weights.json"), "{}", text(&out.stderr));
}

#[tokio::test]
async fn serve_reports_bind_failure() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("m");
    assert!(mx(&["new", "text-classifier", "m", target.to_str().unwrap()]).await.status.success());
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = mx(&["serve", "--host", "127.0.0.1", "--port", &port, "--model-dir", target.to_str().unwrap()]).await;
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("cannot bind"), "{}", text(&out.stderr));
}

#[tokio::test]
async fn validate_unreachable_fails_every_check() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let url = format!("http://127.0.0.1:{port}");
    let out = mx(&["validate", &url, "--json", "--timeout", "2"]).await;
    assert!(!out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 5);
    assert!(checks.iter().all(|c| c["passed"] == false));
}

#[tokio::test]
async fn validate_with_explicit_sample() {
    let svc = ModelService::with_model(detector_model("object-detector"), 1 << 20).unwrap();
    let srv = spawn_server("127.0.0.1:0".parse().unwrap(), svc.router()).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("s.pgm");
    std::fs::write(&sample, two_blob_pgm()).unwrap();
    let out = mx(&["validate", &srv.url(), "--sample", sample.to_str().unwrap()]).await;
    assert!(out.status.success(), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("PASSED (5/5"));

    // A text sample against an image model is rejected with 415.
    let wrong = dir.path().join("s.json");
    std::fs::write(&wrong, r#"{"text":["a"]}"#).unwrap();
    let out = mx(&["validate", &srv.url(), "--sample", wrong.to_str().unwrap()]).await;
    assert!(!out.status.success());
}

#[tokio::test]
async fn registry_client_commands() {
    let dir = tempfile::tempdir().unwrap();
    let svc = ModelService::with_model(sentiment_model("text-sentiment"), 1 << 20).unwrap();
    let model = spawn_server("127.0.0.1:0".parse().unwrap(), svc.router()).await.unwrap();
    let reg = Registry::open(RegistryConfig::new(dir.path().join("r.json"))).unwrap();
    let reg_srv = spawn_server("127.0.0.1:0".parse().unwrap(), api::router(reg)).await.unwrap();
    let r = reg_srv.url();

    let out = mx(&["registry", "register", "text-sentiment", &model.url(), "--registry", &r]).await;
    assert!(out.status.success(), "{}", text(&out.stderr));
    let out = mx(&["registry", "register", "text-sentiment", &model.url(), "--registry", &r]).await;
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("409"));

    let out = mx(&["registry", "list", "--registry", &r]).await;
    let listing = text(&out.stdout);
    assert!(listing.contains("text-sentiment") && listing.contains("healthy"), "{listing}");
    let out = mx(&["registry", "list", "--json", "--registry", &r]).await;
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["metadata"]["name"], "Sentiment");

    assert!(mx(&["registry", "remove", "text-sentiment", "--registry", &r]).await.status.success());
    let out = mx(&["registry", "remove", "text-sentiment", "--registry", &r]).await;
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("404"));
}

#[tokio::test]
async fn registry_serve_binary() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store.json");
    let mut child = tokio::process::Command::new(MX)
        .args(["registry", "serve", "--host", "127.0.0.1", "--port", "0", "--poll-interval", "0.1", "--store"])
        .arg(&store)
        .env_remove("PORT")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .kill_on_drop(true)
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let line = lines.next_line().await.unwrap().unwrap();
    let url = line.strip_prefix("listening on ").unwrap().to_string();

    let svc = ModelService::with_model(sentiment_model("text-sentiment"), 1 << 20).unwrap();
    let model = spawn_server("127.0.0.1:0".parse().unwrap(), svc.router()).await.unwrap();
    let out = mx(&["registry", "register", "text-sentiment", &model.url(), "--registry", &url]).await;
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stored: Value = serde_json::from_str(&std::fs::read_to_string(&store).unwrap()).unwrap();
    assert_eq!(stored["version"], 1);
    assert_eq!(stored["models"][0]["id"], "text-sentiment");
    child.kill().await.unwrap();
}

#[tokio::test]
async fn registry_serve_rejects_zero_poll_interval() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s.json");
    let out = mx(&[
        "registry", "serve", "--host", "127.0.0.1", "--port", "0", "--poll-interval", "0", "--store",
        store.to_str().unwrap(),
    ])
    .await;
    assert!(!out.status.success());
}

trait JsonValue {
    async fn json_value(self) -> Value;
}

impl JsonValue for reqwest::Response {
    async fn json_value(self) -> Value {
        serde_json::from_slice(&self.bytes().await.unwrap()).unwrap()
    }
}

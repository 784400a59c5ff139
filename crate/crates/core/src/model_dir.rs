//! Loading a servable model from a model directory.
//!
//! ```text
//! my-model/
//!   metadata.json   ModelMetadata
//!   weights.json    SentimentWeights or DetectorParams
//!   service.toml    template name and service defaults (optional)
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::metadata::ModelMetadata;
use crate::models::{DetectorModel, DetectorParams, SentimentModel, SentimentWeights};
use crate::pipeline::Servable;

pub const METADATA_FILE: &str = "metadata.json";
pub const WEIGHTS_FILE: &str = "weights.json";
pub const CONFIG_FILE: &str = "service.toml";

/// The model families a directory can hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    TextClassifier,
    ObjectDetector,
}

impl Template {
    pub const ALL: [Template; 2] = [Template::TextClassifier, Template::ObjectDetector];

    pub fn as_str(self) -> &'static str {
        match self {
            Template::TextClassifier => "text-classifier",
            Template::ObjectDetector => "object-detector",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Template {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Template::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown template {s:?} (expected text-classifier or object-detector)"))
    }
}

/// `service.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceFile {
    pub template: Template,
    #[serde(default)]
    pub service: ServiceDefaults,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceDefaults {
    pub port: Option<u16>,
    pub max_body_bytes: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: file not found", .0.display())]
    Missing(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: invalid field {field}: {message}", path.display())]
    Invalid {
        path: PathBuf,
        field: String,
        message: String,
    },
}

pub struct LoadedModel {
    pub template: Template,
    pub defaults: ServiceDefaults,
    pub model: Arc<dyn Servable>,
}

impl fmt::Debug for LoadedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LoadedModel")
            .field("template", &self.template)
            .field("defaults", &self.defaults)
            .field("id", &self.model.metadata().id)
            .finish()
    }
}

pub fn load_model_dir(dir: &Path) -> Result<LoadedModel, LoadError> {
    let meta_path = dir.join(METADATA_FILE);
    let metadata: ModelMetadata = read_json(&meta_path)?;
    if let Some(v) = metadata.violations().into_iter().next() {
        return Err(LoadError::Invalid {
            path: meta_path,
            field: v.field.into(),
            message: v.message,
        });
    }

    let config = read_service_file(dir)?;

    let weights_path = dir.join(WEIGHTS_FILE);
    let raw: serde_json::Value = read_json(&weights_path)?;
    let template = match &config {
        Some(c) => c.template,
        None if raw.get("vocab").is_some() => Template::TextClassifier,
        None if raw.get("threshold").is_some() => Template::ObjectDetector,
        None => {
            return Err(LoadError::Invalid {
                path: weights_path,
                field: "vocab".into(),
                message: format!("cannot infer model template without {CONFIG_FILE}"),
            })
        }
    };

    let model: Arc<dyn Servable> = match template {
        Template::TextClassifier => {
            let weights: SentimentWeights = from_value(&weights_path, raw)?;
            weights
                .validate()
                .map_err(|m| invalid(&weights_path, &m))?;
            Arc::new(SentimentModel::new(metadata, weights))
        }
        Template::ObjectDetector => {
            let params: DetectorParams = from_value(&weights_path, raw)?;
            params.validate().map_err(|m| invalid(&weights_path, &m))?;
            Arc::new(DetectorModel::new(metadata, params))
        }
    };

    Ok(LoadedModel {
        template,
        defaults: config.map(|c| c.service).unwrap_or_default(),
        model,
    })
}

/// Reads `service.toml` if the directory has one.
pub fn read_service_file(dir: &Path) -> Result<Option<ServiceFile>, LoadError> {
    let path = dir.join(CONFIG_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = read_to_string(&path)?;
    toml::from_str(&text)
        .map(Some)
        .map_err(|e| LoadError::Parse {
            path,
            message: e.to_string(),
        })
}

// Messages from `validate()` lead with the field name.
fn invalid(path: &Path, message: &str) -> LoadError {
    let field = message
        .split(|c: char| c == ':' || c.is_whitespace())
        .next()
        .unwrap_or("")
        .to_string();
    LoadError::Invalid {
        path: path.to_path_buf(),
        field,
        message: message.to_string(),
    }
}

fn read_to_string(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            LoadError::Missing(path.to_path_buf())
        } else {
            LoadError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, LoadError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| LoadError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn from_value<T: DeserializeOwned>(path: &Path, v: serde_json::Value) -> Result<T, LoadError> {
    serde_json::from_value(v).map_err(|e| LoadError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

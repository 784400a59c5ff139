//! `mx new`: generates a runnable model service directory from a template.

use std::fs;
use std::path::{Path, PathBuf};

use mx_core::metadata::check_id;
use mx_core::model_dir::{CONFIG_FILE, METADATA_FILE, WEIGHTS_FILE};
use mx_core::models::{DetectorParams, SentimentWeights};
use mx_core::{ModelMetadata, Template};
use mx_server::service::{DEFAULT_MAX_BODY_BYTES, DEFAULT_PORT};

pub const DOCKERFILE: &str = "Dockerfile";
pub const TEST_STUB: &str = "tests/conformance.sh";
pub const README: &str = "README.md";

#[derive(Debug, thiserror::Error)]
pub enum ScaffoldError {
    #[error("invalid model id: {0}")]
    InvalidId(String),
    #[error("{} is not empty; refusing to overwrite", .0.display())]
    NotEmpty(PathBuf),
    #[error("{} exists and is not a directory", .0.display())]
    NotADirectory(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScaffoldError + '_ {
    move |source| ScaffoldError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Name of the sample request fixture for a template.
pub fn sample_file(template: Template) -> &'static str {
    match template {
        Template::TextClassifier => "sample-request.json",
        Template::ObjectDetector => "sample-request.pgm",
    }
}

/// Relative paths a template generates, in creation order.
pub fn template_files(template: Template) -> Vec<&'static str> {
    vec![
        METADATA_FILE,
        WEIGHTS_FILE,
        CONFIG_FILE,
        DOCKERFILE,
        sample_file(template),
        TEST_STUB,
        README,
    ]
}

fn display_name(id: &str) -> String {
    id.split('-')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let mut c = p.chars();
            match c.next() {
                Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn metadata(template: Template, id: &str) -> ModelMetadata {
    let (description, model_type) = match template {
        Template::TextClassifier => (
            "Bag-of-words sentiment classifier returning positive/negative probabilities",
            "text-classification",
        ),
        Template::ObjectDetector => (
            "Threshold and connected-component object detector for grayscale images",
            "object-detection",
        ),
    };
    ModelMetadata {
        id: id.into(),
        name: display_name(id),
        description: description.into(),
        model_type: model_type.into(),
        license: "Apache-2.0".into(),
        source: "local".into(),
    }
}

/// Starter vocabulary for text models.
pub fn default_sentiment_weights() -> SentimentWeights {
    let vocab = [
        ("good", 2.0),
        ("great", 2.5),
        ("excellent", 3.0),
        ("love", 2.0),
        ("enjoyed", 1.5),
        ("fun", 1.0),
        ("bad", -2.0),
        ("terrible", -3.0),
        ("awful", -2.5),
        ("boring", -1.5),
        ("hate", -2.0),
        ("not", -0.5),
    ];
    SentimentWeights {
        vocab: vocab.into_iter().map(|(t, w)| (t.to_string(), w)).collect(),
        bias: 0.0,
    }
}

/// 8x8 ASCII graymap with two bright 2x2 blobs.
pub const SAMPLE_PGM: &str = "P2
# two 2x2 objects on a dark background
8 8
255
255 255   0   0   0   0   0   0
255 255   0   0   0   0   0   0
  0   0   0   0   0   0   0   0
  0   0   0   0   0   0   0   0
  0   0   0   0   0   0   0   0
  0   0   0   0   0   0 204 204
  0   0   0   0   0   0 204 204
  0   0   0   0   0   0   0   0
";

fn render(template: Template, id: &str, file: &str) -> String {
    let pretty = |v: serde_json::Value| serde_json::to_string_pretty(&v).expect("json") + "\n";
    match file {
        METADATA_FILE => pretty(serde_json::to_value(metadata(template, id)).expect("json")),
        WEIGHTS_FILE => match template {
            Template::TextClassifier => {
                pretty(serde_json::to_value(default_sentiment_weights()).expect("json"))
            }
            Template::ObjectDetector => {
                pretty(serde_json::to_value(DetectorParams::default()).expect("json"))
            }
        },
        CONFIG_FILE => format!(
            "template = \"{template}\"\n\n[service]\nport = {DEFAULT_PORT}\nmax_body_bytes = {DEFAULT_MAX_BODY_BYTES}\n"
        ),
        DOCKERFILE => format!(
            "# Image for the {id} model service.\n\
             # Copy a Linux build of the `mx` binary into this directory before building.\n\
             FROM debian:bookworm-slim\n\
             RUN useradd --system --uid 10001 mx\n\
             COPY mx /usr/local/bin/mx\n\
             COPY {METADATA_FILE} {WEIGHTS_FILE} {CONFIG_FILE} /opt/model/\n\
             ENV MODEL_DIR=/opt/model PORT={DEFAULT_PORT}\n\
             EXPOSE {DEFAULT_PORT}\n\
             USER mx\n\
             CMD [\"mx\", \"serve\"]\n"
        ),
        "sample-request.json" => pretty(serde_json::json!({
            "text": ["What a good movie, I loved it", "Boring plot and terrible acting"]
        })),
        "sample-request.pgm" => SAMPLE_PGM.into(),
        TEST_STUB => format!(
            "#!/bin/sh\n\
             # Checks a running {id} service against the standard model API.\n\
             set -eu\n\
             here=$(dirname \"$0\")\n\
             mx validate \"${{MODEL_URL:-http://127.0.0.1:{DEFAULT_PORT}}}\" --sample \"$here/../{}\"\n",
            sample_file(template)
        ),
        README => format!(
            "# {name}\n\n\
             Model service generated from the `{template}` template.\n\n\
             ```sh\n\
             mx serve --model-dir . --port {DEFAULT_PORT}\n\
             mx validate http://127.0.0.1:{DEFAULT_PORT} --sample {sample}\n\
             ```\n\n\
             Edit `{WEIGHTS_FILE}` to change the model and `{METADATA_FILE}` to change how it is\n\
             described. `{DOCKERFILE}` packages the service as a container image.\n",
            name = display_name(id),
            sample = sample_file(template),
        ),
        other => unreachable!("no renderer for {other}"),
    }
}

fn is_empty_dir(dir: &Path) -> Result<bool, ScaffoldError> {
    Ok(fs::read_dir(dir).map_err(io_err(dir))?.next().is_none())
}

/// Writes the template's files into `target`, which must be absent or an
/// empty directory. Files are staged in a sibling temporary directory and
/// moved into place only once all of them are written, so a failure leaves
/// nothing behind.
pub fn scaffold(template: Template, id: &str, target: &Path) -> Result<Vec<PathBuf>, ScaffoldError> {
    check_id(id).map_err(ScaffoldError::InvalidId)?;
    let target_exists = match fs::metadata(target) {
        Ok(m) if !m.is_dir() => return Err(ScaffoldError::NotADirectory(target.into())),
        Ok(_) => {
            if !is_empty_dir(target)? {
                return Err(ScaffoldError::NotEmpty(target.into()));
            }
            true
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => false,
        Err(e) => return Err(io_err(target)(e)),
    };

    let parent = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let staging = tempfile::Builder::new()
        .prefix(".mx-new-")
        .tempdir_in(&parent)
        .map_err(io_err(&parent))?;

    let files = template_files(template);
    for rel in &files {
        let path = staging.path().join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(&path, render(template, id, rel)).map_err(io_err(&path))?;
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let stub = staging.path().join(TEST_STUB);
        fs::set_permissions(&stub, fs::Permissions::from_mode(0o755)).map_err(io_err(&stub))?;
    }

    if target_exists {
        for entry in fs::read_dir(staging.path()).map_err(io_err(staging.path()))? {
            let entry = entry.map_err(io_err(staging.path()))?;
            let dest = target.join(entry.file_name());
            fs::rename(entry.path(), &dest).map_err(io_err(&dest))?;
        }
    } else {
        let staged = staging.keep();
        fs::rename(&staged, target).map_err(|e| {
            let _ = fs::remove_dir_all(&staged);
            io_err(target)(e)
        })?;
    }
    Ok(files.into_iter().map(PathBuf::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mx_core::load_model_dir;

    #[test]
    fn display_names() {
        assert_eq!(display_name("my-model"), "My Model");
        assert_eq!(display_name("det"), "Det");
        assert_eq!(display_name("0x-1"), "0x 1");
    }

    #[test]
    fn text_template_files() {
        let root = tempfile::tempdir().unwrap();
        let target = root.path().join("my-model");
        let created = scaffold(Template::TextClassifier, "my-model", &target).unwrap();
        let names: Vec<_> = created.iter().map(|p| p.to_str().unwrap().to_string()).collect();
        assert_eq!(
            names,
            [
                "metadata.json",
                "weights.json",
                "service.toml",
                "Dockerfile",
                "sample-request.json",
                "tests/conformance.sh",
                "README.md"
            ]
        );
        for p in &created {
            assert!(target.join(p).is_file(), "{}", p.display());
        }
        let loaded = load_model_dir(&target).unwrap();
        assert_eq!(loaded.template, Template::TextClassifier);
        assert_eq!(loaded.model.metadata().id, "my-model");
        assert_eq!(loaded.model.metadata().name, "My Model");
        // Only the target directory remains in the parent.
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);
    }

    #[test]
    fn detector_template_uses_params() {
        let root = tempfile::tempdir().unwrap();
        let target = root.path().join("det");
        scaffold(Template::ObjectDetector, "det", &target).unwrap();
        let weights: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(target.join(WEIGHTS_FILE)).unwrap()).unwrap();
        assert_eq!(weights, serde_json::json!({"threshold": 0.5, "min_area": 4}));
        assert!(target.join("sample-request.pgm").is_file());
        let img = mx_core::models::decode_pgm(SAMPLE_PGM.as_bytes()).unwrap();
        assert_eq!((img.width(), img.height()), (8, 8));
        assert_eq!(load_model_dir(&target).unwrap().template, Template::ObjectDetector);
    }

    #[test]
    fn existing_empty_dir_is_filled() {
        let target = tempfile::tempdir().unwrap();
        scaffold(Template::TextClassifier, "x", target.path()).unwrap();
        assert!(target.path().join(METADATA_FILE).is_file());
        assert!(target.path().join(TEST_STUB).is_file());
        // Staging directory is gone.
        let parent = target.path().parent().unwrap();
        assert!(fs::read_dir(parent)
            .unwrap()
            .all(|e| !e.unwrap().file_name().to_string_lossy().starts_with(".mx-new-")));
    }

    #[test]
    fn refuses_non_empty_dir_without_writing() {
        let target = tempfile::tempdir().unwrap();
        fs::write(target.path().join("keep.txt"), "mine").unwrap();
        let err = scaffold(Template::TextClassifier, "x", target.path()).unwrap_err();
        assert!(matches!(err, ScaffoldError::NotEmpty(_)));
        let entries: Vec<_> = fs::read_dir(target.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(entries, ["keep.txt"]);
    }

    #[test]
    fn refuses_invalid_id_without_writing() {
        let root = tempfile::tempdir().unwrap();
        let target = root.path().join("bad");
        let err = scaffold(Template::TextClassifier, "Bad_ID!", &target).unwrap_err();
        assert!(matches!(err, ScaffoldError::InvalidId(_)));
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 0);
    }

    #[test]
    fn refuses_file_target() {
        let root = tempfile::tempdir().unwrap();
        let target = root.path().join("file");
        fs::write(&target, "x").unwrap();
        assert!(matches!(
            scaffold(Template::ObjectDetector, "x", &target),
            Err(ScaffoldError::NotADirectory(_))
        ));
    }
}

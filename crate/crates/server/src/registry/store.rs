//! Catalog persistence: one JSON file, replaced atomically on every write.
//!
//! ```json
//! {"version": 1, "models": [ModelRecord, ...]}
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::record::ModelRecord;

pub const STORE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoreFile {
    version: u32,
    models: Vec<ModelRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

/// A missing file is an empty catalog.
pub fn load(path: &Path) -> Result<Vec<ModelRecord>, StoreError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(StoreError::Io {
                path: path.into(),
                source,
            })
        }
    };
    let file: StoreFile = serde_json::from_str(&text).map_err(|e| StoreError::Format {
        path: path.into(),
        message: e.to_string(),
    })?;
    if file.version != STORE_VERSION {
        return Err(StoreError::Format {
            path: path.into(),
            message: format!("unsupported store version {}", file.version),
        });
    }
    Ok(file.models)
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn save(path: &Path, models: &[ModelRecord]) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io {
        path: path.into(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let file = StoreFile {
        version: STORE_VERSION,
        models: models.to_vec(),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    serde_json::to_writer_pretty(&mut tmp, &file).map_err(|e| io_err(e.into()))?;
    tmp.write_all(b"\n").map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::Health;
    use chrono::Utc;

    fn record(id: &str) -> ModelRecord {
        ModelRecord {
            id: id.into(),
            url: format!("http://127.0.0.1:9/{id}"),
            metadata: None,
            health: Health::Healthy,
            consecutive_failures: 0,
            last_checked: Utc::now(),
        }
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load(&dir.path().join("none.json")).unwrap().is_empty());
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/store.json");
        let records = vec![record("a"), record("b")];
        save(&path, &records).unwrap();
        assert_eq!(load(&path).unwrap(), records);
        let raw: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(raw["version"], 1);
        // No stray temp files left behind.
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn rejects_other_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        std::fs::write(&path, r#"{"version": 2, "models": []}"#).unwrap();
        assert!(matches!(load(&path), Err(StoreError::Format { .. })));
        std::fs::write(&path, "[]").unwrap();
        assert!(matches!(load(&path), Err(StoreError::Format { .. })));
    }
}

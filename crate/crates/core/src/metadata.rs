//! The identity card every model service publishes at `/model/metadata`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Maximum length of a model id.
pub const MAX_ID_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// URL-safe slug, `[a-z0-9][a-z0-9-]*`.
    pub id: String,
    pub name: String,
    pub description: String,
    /// Free-form domain tag such as `object-detection`.
    pub model_type: String,
    /// SPDX license identifier.
    pub license: String,
    /// Where the model came from: a URL or `local`.
    pub source: String,
}

/// A single broken metadata invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks a model id against the slug rules. Returns a description of the
/// first problem found.
pub fn check_id(id: &str) -> Result<(), String> {
    if id.is_empty() {
        return Err("must not be empty".to_string());
    }
    if id.len() > MAX_ID_LEN {
        return Err(format!("must be at most {MAX_ID_LEN} characters, got {}", id.len()));
    }
    let bytes = id.as_bytes();
    if !(bytes[0].is_ascii_lowercase() || bytes[0].is_ascii_digit()) {
        return Err(format!("{id:?} must start with a lowercase letter or digit"));
    }
    if let Some(bad) = id
        .chars()
        .find(|c| !(c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '-'))
    {
        return Err(format!("{id:?} contains invalid character {bad:?}"));
    }
    Ok(())
}

impl ModelMetadata {
    /// Returns every violated invariant; an empty list means the metadata is valid.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Err(message) = check_id(&self.id) {
            out.push(Violation { field: "id", message });
        }
        if self.name.trim().is_empty() {
            out.push(Violation {
                field: "name",
                message: "must not be empty".into(),
            });
        }
        if self.description.trim().is_empty() {
            out.push(Violation {
                field: "description",
                message: "must not be empty".into(),
            });
        }
        out
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }
}

use serde::{Deserialize, Serialize};

pub const APPLICATION_JSON: &str = "application/json";
pub const IMAGE_PGM: &str = "image/x-portable-graymap";
pub const MULTIPART_FORM_DATA: &str = "multipart/form-data";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// `{"text": ["...", ...]}` batches.
    JsonText,
    /// A single grayscale image, raw or as multipart field `image`.
    Image,
}

/// Declares what a model consumes and what each prediction looks like.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoDescriptor {
    pub input_kind: InputKind,
    /// Names the shape of one per-instance prediction, e.g. `sentiment.v1`.
    pub output_schema_id: String,
    pub accepted_content_types: Vec<String>,
}

impl IoDescriptor {
    pub fn json_text(output_schema_id: impl Into<String>) -> Self {
        Self {
            input_kind: InputKind::JsonText,
            output_schema_id: output_schema_id.into(),
            accepted_content_types: vec![APPLICATION_JSON.into()],
        }
    }

    pub fn image(output_schema_id: impl Into<String>) -> Self {
        Self {
            input_kind: InputKind::Image,
            output_schema_id: output_schema_id.into(),
            accepted_content_types: vec![IMAGE_PGM.into(), MULTIPART_FORM_DATA.into()],
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.accepted_content_types.is_empty() {
            return Err("accepted_content_types must not be empty".into());
        }
        if self.input_kind == InputKind::JsonText && !self.accepts(APPLICATION_JSON) {
            return Err("json_text models must accept application/json".into());
        }
        Ok(())
    }

    /// `mime` is compared by essence, ignoring parameters and case.
    pub fn accepts(&self, mime: &str) -> bool {
        let essence = mime_essence(mime);
        self.accepted_content_types
            .iter()
            .any(|t| mime_essence(t) == essence)
    }
}

/// `Multipart/Form-Data; boundary=x` -> `multipart/form-data`.
pub fn mime_essence(mime: &str) -> String {
    mime.split(';').next().unwrap_or("").trim().to_ascii_lowercase()
}

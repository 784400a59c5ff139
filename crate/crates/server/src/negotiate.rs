//! Maps a predict request body onto the model's declared input kind.

use std::convert::Infallible;

use bytes::Bytes;
use mx_core::io::{mime_essence, IMAGE_PGM, MULTIPART_FORM_DATA};
use mx_core::models::decode_pgm;
use mx_core::{ErrorBody, ErrorCode, InputKind, IoDescriptor, ParsedRequest};
use serde_json::Value;

/// Multipart field carrying the image upload.
pub const IMAGE_FIELD: &str = "image";

fn bad_request(message: impl Into<String>) -> ErrorBody {
    ErrorBody::new(ErrorCode::BadRequest, message)
}

/// `content_type` must already be one of `io.accepted_content_types`.
pub async fn parse_predict_body(
    io: &IoDescriptor,
    content_type: &str,
    body: Bytes,
) -> Result<ParsedRequest, ErrorBody> {
    let instances = match io.input_kind {
        InputKind::JsonText => parse_text_batch(&body)?,
        InputKind::Image => {
            let raw = match mime_essence(content_type).as_str() {
                MULTIPART_FORM_DATA => multipart_image(content_type, body).await?,
                IMAGE_PGM => body,
                other => {
                    return Err(ErrorBody::new(
                        ErrorCode::UnsupportedMediaType,
                        format!("unsupported content type {other:?} for an image model"),
                    ))
                }
            };
            let img = decode_pgm(&raw).map_err(|e| bad_request(format!("invalid image: {e}")))?;
            mx_core::Instances::Image(img)
        }
    };
    Ok(ParsedRequest {
        instances,
        declared_content_type: content_type.to_string(),
    })
}

/// `{"text": ["...", ...]}`. Extra keys are ignored.
fn parse_text_batch(body: &[u8]) -> Result<mx_core::Instances, ErrorBody> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| bad_request(format!("malformed JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| bad_request("request body must be a JSON object"))?;
    let text = obj
        .get("text")
        .ok_or_else(|| bad_request("missing \"text\" field"))?;
    let items = text
        .as_array()
        .ok_or_else(|| bad_request("\"text\" must be an array of strings"))?;
    let texts = items
        .iter()
        .map(|v| v.as_str().map(str::to_owned))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| bad_request("\"text\" must be an array of strings"))?;
    if texts.is_empty() {
        return Err(ErrorBody::new(
            ErrorCode::UnprocessableEntity,
            "\"text\" must contain at least one instance",
        ));
    }
    Ok(mx_core::Instances::Text(texts))
}

async fn multipart_image(content_type: &str, body: Bytes) -> Result<Bytes, ErrorBody> {
    let boundary = multer::parse_boundary(content_type)
        .map_err(|e| bad_request(format!("invalid multipart content type: {e}")))?;
    let stream = futures::stream::once(async move { Ok::<Bytes, Infallible>(body) });
    let mut form = multer::Multipart::new(stream, boundary);
    loop {
        let field = form
            .next_field()
            .await
            .map_err(|e| bad_request(format!("malformed multipart body: {e}")))?;
        let Some(field) = field else {
            return Err(bad_request(format!("missing multipart field {IMAGE_FIELD:?}")));
        };
        if field.name() == Some(IMAGE_FIELD) {
            return field
                .bytes()
                .await
                .map_err(|e| bad_request(format!("malformed multipart body: {e}")));
        }
    }
}

//! OpenAPI 3.0 document describing one model service.

use serde_json::{json, Map, Value};

use crate::io::{IoDescriptor, APPLICATION_JSON, IMAGE_PGM, MULTIPART_FORM_DATA};
use crate::metadata::{ModelMetadata, Violation};
use crate::models::{detector, sentiment};

pub const OPENAPI_VERSION: &str = "3.0.3";
/// Version of the standardized endpoint contract, reported as `info.version`.
pub const API_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OpenApiError {
    #[error("invalid metadata: {}", join(.0))]
    Metadata(Vec<Violation>),
    #[error("invalid io descriptor: {0}")]
    Io(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub fn build_openapi(metadata: &ModelMetadata, io: &IoDescriptor) -> Result<Value, OpenApiError> {
    metadata.validate().map_err(OpenApiError::Metadata)?;
    io.validate().map_err(OpenApiError::Io)?;

    let error_response = |description: &str| {
        json!({
            "description": description,
            "content": {APPLICATION_JSON: {"schema": {"$ref": "#/components/schemas/ErrorEnvelope"}}}
        })
    };

    let mut request_content = Map::new();
    for mime in &io.accepted_content_types {
        request_content.insert(mime.clone(), json!({"schema": request_schema(mime)}));
    }

    Ok(json!({
        "openapi": OPENAPI_VERSION,
        "info": {
            "title": metadata.name,
            "description": metadata.description,
            "version": API_VERSION,
            "license": {"name": metadata.license},
            "x-model-id": metadata.id,
            "x-model-type": metadata.model_type,
            "x-model-source": metadata.source,
        },
        "tags": [{"name": "model", "description": "Model information and inference"}],
        "paths": {
            "/model/metadata": {
                "get": {
                    "tags": ["model"],
                    "operationId": "getMetadata",
                    "summary": "Return the metadata of the served model",
                    "responses": {
                        "200": {
                            "description": "Model metadata",
                            "content": {APPLICATION_JSON: {"schema": {"$ref": "#/components/schemas/ModelMetadata"}}}
                        },
                        "503": error_response("Model is still loading"),
                    }
                }
            },
            "/model/predict": {
                "post": {
                    "tags": ["model"],
                    "operationId": "predict",
                    "summary": "Run inference on a batch of inputs",
                    "requestBody": {"required": true, "content": request_content},
                    "responses": {
                        "200": {
                            "description": "One prediction per input instance",
                            "content": {APPLICATION_JSON: {"schema": {"$ref": "#/components/schemas/PredictionEnvelope"}}}
                        },
                        "400": error_response("Malformed request body"),
                        "413": error_response("Request body too large"),
                        "415": error_response("Unsupported content type"),
                        "422": error_response("Empty instance list"),
                        "500": error_response("Model failure"),
                        "503": error_response("Model is still loading"),
                    }
                }
            },
            "/health": {
                "get": {
                    "operationId": "health",
                    "summary": "Liveness and readiness probe",
                    "responses": {
                        "200": {
                            "description": "Service is ready",
                            "content": {APPLICATION_JSON: {"schema": {
                                "type": "object",
                                "required": ["status"],
                                "properties": {"status": {"type": "string", "enum": ["ok"]}}
                            }}}
                        },
                        "503": error_response("Model is still loading"),
                    }
                }
            }
        },
        "components": {
            "schemas": {
                "ModelMetadata": metadata_schema(),
                "ErrorBody": {
                    "type": "object",
                    "required": ["code", "message"],
                    "properties": {
                        "code": {"type": "integer", "enum": [400, 404, 413, 415, 422, 500, 502, 503]},
                        "message": {"type": "string"}
                    }
                },
                "ErrorEnvelope": {
                    "type": "object",
                    "required": ["status", "error"],
                    "properties": {
                        "status": {"type": "string", "enum": ["error"]},
                        "error": {"$ref": "#/components/schemas/ErrorBody"}
                    }
                },
                "Prediction": prediction_schema(&io.output_schema_id),
                "PredictionEnvelope": {
                    "type": "object",
                    "required": ["status", "predictions"],
                    "properties": {
                        "status": {"type": "string", "enum": ["ok"]},
                        "predictions": {
                            "type": "array",
                            "description": "One entry per input instance, in request order",
                            "items": {"$ref": "#/components/schemas/Prediction"}
                        }
                    }
                }
            }
        }
    }))
}

fn request_schema(mime: &str) -> Value {
    match crate::io::mime_essence(mime).as_str() {
        APPLICATION_JSON => json!({
            "type": "object",
            "required": ["text"],
            "properties": {
                "text": {"type": "array", "minItems": 1, "items": {"type": "string"}}
            },
            "example": {"text": ["a good movie", "a bad plot"]}
        }),
        IMAGE_PGM => json!({"type": "string", "format": "binary"}),
        MULTIPART_FORM_DATA => json!({
            "type": "object",
            "required": ["image"],
            "properties": {"image": {"type": "string", "format": "binary"}}
        }),
        _ => json!({}),
    }
}

fn metadata_schema() -> Value {
    let string = json!({"type": "string"});
    json!({
        "type": "object",
        "required": ["id", "name", "description", "model_type", "license", "source"],
        "properties": {
            "id": {"type": "string", "pattern": "^[a-z0-9][a-z0-9-]*$", "minLength": 1, "maxLength": 64},
            "name": {"type": "string", "minLength": 1},
            "description": {"type": "string", "minLength": 1},
            "model_type": string,
            "license": string,
            "source": string,
        }
    })
}

fn prediction_schema(output_schema_id: &str) -> Value {
    let probability = json!({"type": "number", "minimum": 0, "maximum": 1});
    let mut schema = match output_schema_id {
        sentiment::OUTPUT_SCHEMA => json!({
            "type": "array",
            "items": {
                "type": "object",
                "required": ["positive", "negative"],
                "properties": {"positive": probability, "negative": probability}
            }
        }),
        detector::OUTPUT_SCHEMA => json!({
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label_id", "label", "probability", "detection_box"],
                "properties": {
                    "label_id": {"type": "string"},
                    "label": {"type": "string"},
                    "probability": probability,
                    "detection_box": {
                        "type": "array",
                        "description": "[ymin, xmin, ymax, xmax], normalized",
                        "minItems": 4,
                        "maxItems": 4,
                        "items": probability
                    }
                }
            }
        }),
        _ => json!({}),
    };
    schema["x-output-schema-id"] = json!(output_schema_id);
    schema
}

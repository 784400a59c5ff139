//! Shared model-serving contract: metadata, the prediction envelope, the
//! three-stage wrapper pipeline, OpenAPI generation, and the two reference
//! models (bag-of-words sentiment, connected-component detector).

pub mod envelope;
pub mod io;
pub mod metadata;
pub mod model_dir;
pub mod models;
pub mod openapi;
pub mod pipeline;

pub use envelope::{ErrorBody, ErrorCode, PredictionEnvelope, Status};
pub use io::{InputKind, IoDescriptor};
pub use metadata::{ModelMetadata, Violation};
pub use model_dir::{load_model_dir, LoadError, LoadedModel, Template};
pub use openapi::build_openapi;
pub use pipeline::{run_pipeline, Instances, ModelWrapper, ParsedRequest, Servable, StageError};

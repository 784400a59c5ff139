//! The three-stage wrapper contract and the pipeline that drives it.

use std::panic::{catch_unwind, AssertUnwindSafe};

use serde_json::Value;

use crate::envelope::{ErrorCode, PredictionEnvelope};
use crate::io::IoDescriptor;
use crate::metadata::ModelMetadata;
use crate::models::GrayImage;

/// Request payload after content negotiation.
#[derive(Debug, Clone, PartialEq)]
pub enum Instances {
    Text(Vec<String>),
    Image(GrayImage),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRequest {
    pub instances: Instances,
    pub declared_content_type: String,
}

impl ParsedRequest {
    pub fn text<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self {
            instances: Instances::Text(texts.into_iter().map(Into::into).collect()),
            declared_content_type: crate::io::APPLICATION_JSON.into(),
        }
    }

    pub fn image(image: GrayImage) -> Self {
        Self {
            instances: Instances::Image(image),
            declared_content_type: crate::io::IMAGE_PGM.into(),
        }
    }

    /// Number of predictions the response must carry.
    pub fn instance_count(&self) -> usize {
        match &self.instances {
            Instances::Text(t) => t.len(),
            Instances::Image(_) => 1,
        }
    }
}

/// A failure inside one pipeline stage. The message is sent to clients.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct StageError(pub String);

impl StageError {
    pub fn new(message: impl Into<String>) -> Self {
        StageError(message.into())
    }
}

/// Adapter that turns a predictive model into a conformant service core.
///
/// Implementations hold only state fixed at load time; every method takes
/// `&self`, so one wrapper can serve concurrent requests.
pub trait ModelWrapper: Send + Sync {
    type Input;
    type Output;

    fn metadata(&self) -> &ModelMetadata;
    fn io(&self) -> &IoDescriptor;

    fn pre_process(&self, request: &ParsedRequest) -> Result<Self::Input, StageError>;
    fn predict(&self, input: Self::Input) -> Result<Self::Output, StageError>;
    /// One JSON value per input instance, in input order.
    fn post_process(&self, output: Self::Output) -> Result<Vec<Value>, StageError>;
}

/// Runs pre_process, predict and post_process, mapping any failure to an
/// error envelope: 400 for pre_process, 500 for the later stages. A stage
/// that panics is treated as a failure of that stage.
pub fn run_pipeline<W: ModelWrapper + ?Sized>(
    wrapper: &W,
    request: &ParsedRequest,
) -> PredictionEnvelope {
    let input = match guarded(|| wrapper.pre_process(request)) {
        Ok(i) => i,
        Err(e) => return PredictionEnvelope::error(ErrorCode::BadRequest, e.0),
    };
    let output = match guarded(|| wrapper.predict(input)) {
        Ok(o) => o,
        Err(e) => return PredictionEnvelope::error(ErrorCode::Internal, e.0),
    };
    let predictions = match guarded(|| wrapper.post_process(output)) {
        Ok(p) => p,
        Err(e) => return PredictionEnvelope::error(ErrorCode::Internal, e.0),
    };
    let expected = request.instance_count();
    if predictions.len() != expected {
        return PredictionEnvelope::error(
            ErrorCode::Internal,
            format!(
                "model produced {} predictions for {expected} instances",
                predictions.len()
            ),
        );
    }
    PredictionEnvelope::Ok(predictions)
}

fn guarded<T>(stage: impl FnOnce() -> Result<T, StageError>) -> Result<T, StageError> {
    catch_unwind(AssertUnwindSafe(stage))
        .unwrap_or_else(|_| Err(StageError::new("model stage panicked")))
}

/// Object-safe view of a wrapper, used by the HTTP layer to hold any model
/// behind one pointer type.
pub trait Servable: Send + Sync {
    fn metadata(&self) -> &ModelMetadata;
    fn io(&self) -> &IoDescriptor;
    fn run(&self, request: &ParsedRequest) -> PredictionEnvelope;
}

impl<W: ModelWrapper> Servable for W {
    fn metadata(&self) -> &ModelMetadata {
        ModelWrapper::metadata(self)
    }

    fn io(&self) -> &IoDescriptor {
        ModelWrapper::io(self)
    }

    fn run(&self, request: &ParsedRequest) -> PredictionEnvelope {
        run_pipeline(self, request)
    }
}

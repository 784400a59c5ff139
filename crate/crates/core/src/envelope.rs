//! The standardized response wrapper returned by every model service.
//!
//! ```json
//! {"status": "ok", "predictions": [[{"positive": 0.99, "negative": 0.01}]]}
//! {"status": "error", "error": {"code": 415, "message": "..."}}
//! ```
//!
//! Exactly one of `predictions` / `error` is present and it always agrees
//! with `status`. The enum representation makes any other combination
//! unrepresentable; deserialization rejects it.

use std::fmt;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

/// HTTP-mirroring error codes an envelope may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    PayloadTooLarge,
    UnsupportedMediaType,
    UnprocessableEntity,
    Internal,
    BadGateway,
    ServiceUnavailable,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 8] = [
        ErrorCode::BadRequest,
        ErrorCode::NotFound,
        ErrorCode::PayloadTooLarge,
        ErrorCode::UnsupportedMediaType,
        ErrorCode::UnprocessableEntity,
        ErrorCode::Internal,
        ErrorCode::BadGateway,
        ErrorCode::ServiceUnavailable,
    ];

    pub const fn as_u16(self) -> u16 {
        match self {
            ErrorCode::BadRequest => 400,
            ErrorCode::NotFound => 404,
            ErrorCode::PayloadTooLarge => 413,
            ErrorCode::UnsupportedMediaType => 415,
            ErrorCode::UnprocessableEntity => 422,
            ErrorCode::Internal => 500,
            ErrorCode::BadGateway => 502,
            ErrorCode::ServiceUnavailable => 503,
        }
    }

    pub fn from_u16(code: u16) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_u16() == code)
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u16())
    }
}

impl Serialize for ErrorCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u16(self.as_u16())
    }
}

impl<'de> Deserialize<'de> for ErrorCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = u16::deserialize(d)?;
        ErrorCode::from_u16(code)
            .ok_or_else(|| serde::de::Error::custom(format!("unsupported error code {code}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: ErrorCode,
    /// Human-readable, never a stack trace.
    pub message: String,
}

impl ErrorBody {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "RawEnvelope")]
pub enum PredictionEnvelope {
    /// One prediction value per input instance, in input order.
    Ok(Vec<Value>),
    Error(ErrorBody),
}

impl PredictionEnvelope {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        PredictionEnvelope::Error(ErrorBody::new(code, message))
    }

    pub fn status(&self) -> Status {
        match self {
            PredictionEnvelope::Ok(_) => Status::Ok,
            PredictionEnvelope::Error(_) => Status::Error,
        }
    }

    pub fn predictions(&self) -> Option<&[Value]> {
        match self {
            PredictionEnvelope::Ok(p) => Some(p),
            PredictionEnvelope::Error(_) => None,
        }
    }

    pub fn error_body(&self) -> Option<&ErrorBody> {
        match self {
            PredictionEnvelope::Ok(_) => None,
            PredictionEnvelope::Error(e) => Some(e),
        }
    }

    /// HTTP status the envelope should travel with.
    pub fn http_status(&self) -> u16 {
        match self {
            PredictionEnvelope::Ok(_) => 200,
            PredictionEnvelope::Error(e) => e.code.as_u16(),
        }
    }

    /// Compact UTF-8 JSON. Floats use the shortest round-trip representation.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("envelope serialization is infallible")
    }
}

impl Serialize for PredictionEnvelope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("status", &self.status())?;
        match self {
            PredictionEnvelope::Ok(p) => map.serialize_entry("predictions", p)?,
            PredictionEnvelope::Error(e) => map.serialize_entry("error", e)?,
        }
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvelope {
    status: Status,
    predictions: Option<Vec<Value>>,
    error: Option<ErrorBody>,
}

/// Why a JSON document is not a valid envelope.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvelopeShapeError {
    #[error("status is \"ok\" but predictions is missing")]
    MissingPredictions,
    #[error("status is \"error\" but error is missing")]
    MissingError,
    #[error("status is \"ok\" but an error body is present")]
    UnexpectedError,
    #[error("status is \"error\" but predictions are present")]
    UnexpectedPredictions,
}

impl TryFrom<RawEnvelope> for PredictionEnvelope {
    type Error = EnvelopeShapeError;

    fn try_from(raw: RawEnvelope) -> Result<Self, EnvelopeShapeError> {
        match (raw.status, raw.predictions, raw.error) {
            (Status::Ok, Some(p), None) => Ok(PredictionEnvelope::Ok(p)),
            (Status::Ok, None, _) => Err(EnvelopeShapeError::MissingPredictions),
            (Status::Ok, Some(_), Some(_)) => Err(EnvelopeShapeError::UnexpectedError),
            (Status::Error, None, Some(e)) => Ok(PredictionEnvelope::Error(e)),
            (Status::Error, _, None) => Err(EnvelopeShapeError::MissingError),
            (Status::Error, Some(_), Some(_)) => Err(EnvelopeShapeError::UnexpectedPredictions),
        }
    }
}

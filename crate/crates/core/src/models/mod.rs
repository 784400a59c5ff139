//! Deterministic reference models that exercise the full wrapper contract.

pub mod detector;
pub mod pgm;
pub mod sentiment;

pub use detector::{detect_components, Detection, DetectorModel, DetectorParams};
pub use pgm::{decode_pgm, GrayImage, PgmError};
pub use sentiment::{sentiment_predict, tokenize, SentimentModel, SentimentScore, SentimentWeights};

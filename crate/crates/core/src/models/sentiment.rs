//! Sparse linear bag-of-words sentiment classifier.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::io::IoDescriptor;
use crate::metadata::ModelMetadata;
use crate::pipeline::{Instances, ModelWrapper, ParsedRequest, StageError};

pub const OUTPUT_SCHEMA: &str = "sentiment.v1";

/// Lowercased maximal runs of ASCII alphanumerics. Everything else separates.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

/// Contents of a text model's `weights.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentimentWeights {
    pub vocab: BTreeMap<String, f64>,
    pub bias: f64,
}

impl SentimentWeights {
    pub fn validate(&self) -> Result<(), String> {
        if !self.bias.is_finite() {
            return Err("bias must be a finite number".into());
        }
        for (token, weight) in &self.vocab {
            if token.is_empty() {
                return Err("vocab: tokens must not be empty".into());
            }
            if token.chars().any(char::is_whitespace) {
                return Err(format!("vocab: token {token:?} contains whitespace"));
            }
            if token.chars().any(char::is_uppercase) {
                return Err(format!("vocab: token {token:?} must be lowercase"));
            }
            if !weight.is_finite() {
                return Err(format!("vocab: weight of {token:?} must be finite"));
            }
        }
        Ok(())
    }

    /// `bias + Σ weight(token)`, summed in token order. Unknown tokens add 0.
    pub fn logit<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        tokens.iter().fold(self.bias, |z, t| {
            z + self.vocab.get(t.as_ref()).copied().unwrap_or(0.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub positive: f64,
    pub negative: f64,
}

impl SentimentScore {
    /// Both sides are evaluated as logistic functions so that
    /// `negative(z) == positive(-z)` bit for bit.
    pub fn from_logit(z: f64) -> Self {
        SentimentScore {
            positive: logistic(z),
            negative: logistic(-z),
        }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn sentiment_predict<S: AsRef<str>>(
    weights: &SentimentWeights,
    instances: &[Vec<S>],
) -> Vec<SentimentScore> {
    instances
        .iter()
        .map(|tokens| SentimentScore::from_logit(weights.logit(tokens)))
        .collect()
}

pub struct SentimentModel {
    metadata: ModelMetadata,
    io: IoDescriptor,
    weights: SentimentWeights,
}

impl SentimentModel {
    pub fn new(metadata: ModelMetadata, weights: SentimentWeights) -> Self {
        SentimentModel {
            metadata,
            io: IoDescriptor::json_text(OUTPUT_SCHEMA),
            weights,
        }
    }

    pub fn weights(&self) -> &SentimentWeights {
        &self.weights
    }
}

impl ModelWrapper for SentimentModel {
    type Input = Vec<Vec<String>>;
    type Output = Vec<SentimentScore>;

    fn metadata(&self) -> &ModelMetadata {
        &self.metadata
    }

    fn io(&self) -> &IoDescriptor {
        &self.io
    }

    fn pre_process(&self, request: &ParsedRequest) -> Result<Self::Input, StageError> {
        match &request.instances {
            Instances::Text(texts) => Ok(texts.iter().map(|t| tokenize(t)).collect()),
            Instances::Image(_) => Err(StageError::new("this model expects text input")),
        }
    }

    fn predict(&self, input: Self::Input) -> Result<Self::Output, StageError> {
        Ok(sentiment_predict(&self.weights, &input))
    }

    fn post_process(&self, output: Self::Output) -> Result<Vec<Value>, StageError> {
        output
            .into_iter()
            .map(|score| {
                serde_json::to_value([score]).map_err(|e| StageError::new(e.to_string()))
            })
            .collect()
    }
}

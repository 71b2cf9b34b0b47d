//! Wire types of the logit-server protocol (HTTP + JSON).
//!
//! | endpoint           | request                     | response                     |
//! |--------------------|-----------------------------|------------------------------|
//! | `GET /info`        | -                           | [`ServerInfo`]               |
//! | `POST /tokenize`   | `{"text": str}`             | `{"ids": [int]}`             |
//! | `POST /detokenize` | `{"ids": [int]}`            | `{"text": str}`              |
//! | `POST /logprobs`   | `{"contexts": [[int]]}`     | `{"vectors": [[float]]}`     |
//!
//! Vectors hold natural-log probabilities. A `null` entry encodes zero
//! probability (`-inf`), which JSON numbers cannot represent. Errors carry
//! `{"error": str}` with status 400 (bad request) or 503 (model unavailable).

use serde::{Deserialize, Serialize};

use super::TokenId;

pub const NORMALIZATION_LOGPROB: &str = "logprob";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerInfo {
    pub model: String,
    pub vocab_size: usize,
    pub special_tokens: SpecialTokenIds,
    pub normalization: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokenIds {
    #[serde(default)]
    pub bos: Option<TokenId>,
    pub eos: TokenId,
    #[serde(default)]
    pub newline: Option<TokenId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizeRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizeResponse {
    pub ids: Vec<TokenId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetokenizeRequest {
    pub ids: Vec<TokenId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetokenizeResponse {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobsRequest {
    pub contexts: Vec<Vec<TokenId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobsResponse {
    pub vectors: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_context_len: Option<usize>,
}

/// Encodes `-inf` as `null`.
pub fn encode_vector(values: &[f64]) -> Vec<Option<f64>> {
    values
        .iter()
        .map(|&v| if v == f64::NEG_INFINITY { None } else { Some(v) })
        .collect()
}

/// Decodes `null` as `-inf`.
pub fn decode_vector(values: &[Option<f64>]) -> Vec<f64> {
    values.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect()
}

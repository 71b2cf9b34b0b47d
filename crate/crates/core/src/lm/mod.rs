//! Logit sources.
//!
//! Every decoding objective in this crate consumes one primitive: the
//! full-vocabulary next-token log-probability vector for a given token
//! context. [`LogitSource`] is that contract. Implementations:
//!
//! - [`NGramLM`]: deterministic add-k n-gram model used for desk-scale checks.
//! - [`CachedSource`]: bounded memo around any source, with query counters.
//! - [`RemoteSource`]: HTTP client for the logit-server protocol.
//!
//! [`LogitServer`] serves any source over the same protocol (used as an
//! in-process mock of a real model server).

mod cache;
mod ngram;
pub mod protocol;
mod remote;
mod server;
mod vocab;

use std::sync::Arc;

pub use cache::{CacheStats, CachedSource, ContextQueries};
pub use ngram::NGramLM;
pub use remote::RemoteSource;
pub use server::{LogitServer, ServerConfig};
pub use vocab::{Vocabulary, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN};

pub type TokenId = u32;
pub type TokenSeq = Vec<TokenId>;

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("invalid context: token id {id} is outside a vocabulary of size {vocab_size}")]
    InvalidToken { id: TokenId, vocab_size: usize },
    #[error("invalid context: {0}")]
    InvalidContext(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model document: {0}")]
    Format(#[from] serde_json::Error),
}

impl LmError {
    /// True when the failure came from reaching the source, not from the request.
    pub fn is_transport(&self) -> bool {
        matches!(self, LmError::Transport(_))
    }
}

/// Token ids with special meaning to the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecialTokens {
    pub bos: Option<TokenId>,
    pub eos: TokenId,
    pub newline: Option<TokenId>,
}

impl SpecialTokens {
    /// The default stop set: end-of-sequence plus newline when the vocabulary has one.
    pub fn default_stop_ids(&self) -> Vec<TokenId> {
        let mut ids = vec![self.eos];
        if let Some(nl) = self.newline {
            if nl != self.eos {
                ids.push(nl);
            }
        }
        ids
    }
}

/// Natural-log next-token probabilities, one entry per vocabulary id.
///
/// Entries may be `-inf` for ids the source can never emit (the toy model's
/// begin-of-sequence and unknown ids).
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbVector(Vec<f64>);

impl LogProbVector {
    /// Wraps values that are already log-probabilities.
    pub fn from_normalized(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// Normalizes raw logits with a log-sum-exp shift.
    pub fn from_logits(mut logits: Vec<f64>) -> Self {
        let lse = logsumexp(&logits);
        if lse.is_finite() {
            for v in &mut logits {
                *v -= lse;
            }
        }
        Self(logits)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: TokenId) -> Option<f64> {
        self.0.get(id as usize).copied()
    }

    pub fn logsumexp(&self) -> f64 {
        logsumexp(&self.0)
    }
}

/// `ln Σ exp(x_i)`, stable for large magnitudes; `-inf` for an empty or all `-inf` input.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Provider of next-token log-probability vectors.
///
/// Implementations must be pure for a fixed model state and safe for
/// concurrent read-only use.
pub trait LogitSource: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn special_tokens(&self) -> SpecialTokens;

    /// Log-probabilities of the token following `context`.
    fn next_logprobs(&self, context: &[TokenId]) -> Result<LogProbVector, LmError>;

    /// Batched form of [`next_logprobs`](Self::next_logprobs); output order matches input order.
    fn next_logprobs_batch(&self, contexts: &[TokenSeq]) -> Result<Vec<LogProbVector>, LmError> {
        contexts.iter().map(|c| self.next_logprobs(c)).collect()
    }

    fn tokenize(&self, text: &str) -> Result<TokenSeq, LmError>;

    fn detokenize(&self, ids: &[TokenId]) -> Result<String, LmError>;
}

macro_rules! forward_logit_source {
    ($($ty:ty),*) => {$(
        impl<S: LogitSource + ?Sized> LogitSource for $ty {
            fn vocab_size(&self) -> usize {
                (**self).vocab_size()
            }
            fn special_tokens(&self) -> SpecialTokens {
                (**self).special_tokens()
            }
            fn next_logprobs(&self, context: &[TokenId]) -> Result<LogProbVector, LmError> {
                (**self).next_logprobs(context)
            }
            fn next_logprobs_batch(
                &self,
                contexts: &[TokenSeq],
            ) -> Result<Vec<LogProbVector>, LmError> {
                (**self).next_logprobs_batch(contexts)
            }
            fn tokenize(&self, text: &str) -> Result<TokenSeq, LmError> {
                (**self).tokenize(text)
            }
            fn detokenize(&self, ids: &[TokenId]) -> Result<String, LmError> {
                (**self).detokenize(ids)
            }
        }
    )*};
}

forward_logit_source!(&S, Box<S>, Arc<S>);

/// Rejects any id outside `0..vocab_size`.
pub(crate) fn check_context(context: &[TokenId], vocab_size: usize) -> Result<(), LmError> {
    match context.iter().find(|&&id| id as usize >= vocab_size) {
        Some(&id) => Err(LmError::InvalidToken { id, vocab_size }),
        None => Ok(()),
    }
}

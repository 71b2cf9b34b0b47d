//! Translation quality and failure metrics.

mod bleu;
mod failure;
mod langid;

pub use bleu::{corpus_bleu, sentence_bleu, tokenize_13a, BleuResult, BleuStats};
pub use failure::{
    failure_label, mer, mer_counts, reg, FailureCounts, FailureLabel, MerCounts,
};
pub use langid::LangIdModel;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("contract violation: {left} items paired with {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("contract violation: {0}")]
    Empty(&'static str),
    #[error("configuration error: {0}")]
    Config(String),
}

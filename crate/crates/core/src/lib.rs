//! Contrastive decoding for zero-shot in-context translation.
//!
//! The crate scores next tokens with contrastive objectives that subtract
//! a weighted auxiliary log-probability from the model's conditional
//! log-probability, decodes with greedy or beam search, and evaluates the
//! results with BLEU, empty-generation and missing-entity rates and a
//! failure-to-translate classifier.
//!
//! - [`lm`]: logit sources (toy n-gram model, HTTP client and server, cache)
//! - [`objectives`]: the five scoring objectives
//! - [`decoder`]: greedy, beam and exhaustive search
//! - [`metrics`]: BLEU, REG, MER, language identification
//! - [`corpus`]: JSONL corpora and prompt templates
//! - [`runner`]: experiments, sweeps and comparisons

pub mod corpus;
pub mod decoder;
pub mod lm;
pub mod metrics;
pub mod objectives;
pub mod runner;

use std::borrow::Borrow;

use serde::{Deserialize, Serialize};

use super::{LangIdModel, MetricsError};
use crate::corpus::SentenceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureLabel {
    Ok,
    Empty,
    SourceLanguage,
}

impl FailureLabel {
    pub fn is_failure(self) -> bool {
        self != FailureLabel::Ok
    }
}

/// `empty` wins over `source-language`: blank text is never classified.
pub fn failure_label(record: &SentenceRecord, text: &str, model: &LangIdModel) -> FailureLabel {
    if text.trim().is_empty() {
        FailureLabel::Empty
    } else if model.classify(text) == record.source_lang {
        FailureLabel::SourceLanguage
    } else {
        FailureLabel::Ok
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub ok: usize,
    pub empty: usize,
    pub source_language: usize,
}

impl FailureCounts {
    pub fn tally(labels: impl IntoIterator<Item = FailureLabel>) -> Self {
        let mut c = Self::default();
        for label in labels {
            match label {
                FailureLabel::Ok => c.ok += 1,
                FailureLabel::Empty => c.empty += 1,
                FailureLabel::SourceLanguage => c.source_language += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.ok + self.empty + self.source_language
    }

    /// Sentences that failed to translate (empty or source language).
    pub fn failures(&self) -> usize {
        self.empty + self.source_language
    }
}

/// Rate of empty generation in percent. Callers pass `""` for decodes that
/// errored, so they count as empty.
pub fn reg<S: AsRef<str>>(texts: &[S]) -> Result<f64, MetricsError> {
    if texts.is_empty() {
        return Err(MetricsError::Empty("reg needs at least one generation"));
    }
    let empty = texts.iter().filter(|t| t.as_ref().trim().is_empty()).count();
    Ok(100.0 * empty as f64 / texts.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerCounts {
    pub missing: usize,
    /// Source entities that also appear in their reference.
    pub total: usize,
    /// Sentences with at least one such entity.
    pub sentences: usize,
}

impl MerCounts {
    /// Missing entity rate in percent; `None` when no entity qualifies.
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.missing as f64 / self.total as f64)
    }
}

fn squash(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Counts missing entities. An entity is expected in the translation when
/// it occurs verbatim in the reference; it is missing when it does not occur
/// verbatim in the hypothesis. Matching is case-sensitive substring search
/// on whitespace-normalized text.
pub fn mer_counts<R: Borrow<SentenceRecord>, S: AsRef<str>>(
    records: &[R],
    hyps: &[S],
) -> Result<MerCounts, MetricsError> {
    if records.len() != hyps.len() {
        return Err(MetricsError::LengthMismatch {
            left: records.len(),
            right: hyps.len(),
        });
    }
    let mut counts = MerCounts::default();
    for (record, hyp) in records.iter().zip(hyps) {
        let record = record.borrow();
        let reference = squash(&record.reference);
        let hyp = squash(hyp.as_ref());
        let mut any = false;
        for entity in &record.entities {
            let entity = squash(entity);
            if entity.is_empty() || !reference.contains(&entity) {
                continue;
            }
            any = true;
            counts.total += 1;
            if !hyp.contains(&entity) {
                counts.missing += 1;
            }
        }
        counts.sentences += usize::from(any);
    }
    Ok(counts)
}

pub fn mer<R: Borrow<SentenceRecord>, S: AsRef<str>>(records: &[R], hyps: &[S]) -> Result<Option<f64>, MetricsError> {
    Ok(mer_counts(records, hyps)?.rate())
}

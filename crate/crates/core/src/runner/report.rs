use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::corpus::{SentenceRecord, TemplateId};
use crate::decoder::Strategy;
use crate::lm::TokenId;
use crate::metrics::{
    corpus_bleu, mer_counts, reg, sentence_bleu, BleuResult, FailureCounts, FailureLabel, MerCounts,
};
use crate::objectives::{GammaOrigin, ObjectiveKind, ObjectiveSpec};

pub const REPORT_FORMAT: &str = "antilm-report";

/// One decode of one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRow {
    pub id: String,
    pub objective: ObjectiveKind,
    pub weight: f64,
    pub strategy: Strategy,
    /// Empty when the decode errored.
    pub text: String,
    pub reference: String,
    /// Cumulative adjusted score; absent when the decode errored.
    pub score: Option<f64>,
    pub tokens: usize,
    pub failure: FailureLabel,
    pub sentence_bleu: f64,
    pub main_queries: u64,
    pub aux_queries: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub objective: ObjectiveKind,
    pub weight: f64,
    pub strategy: Strategy,
    pub sentences: usize,
    pub bleu: BleuResult,
    /// Percent of empty generations; errored decodes count as empty.
    pub reg: f64,
    /// Percent of expected entities missing; absent when no entity qualifies.
    pub mer: Option<f64>,
    pub mer_counts: MerCounts,
    pub failures: FailureCounts,
    pub errors: usize,
    pub main_queries: u64,
    pub aux_queries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeSettings {
    pub beam_width: usize,
    pub max_new_tokens: usize,
    pub stop_token_ids: Vec<TokenId>,
    pub gamma_origin: GammaOrigin,
}

/// Everything a run produces that is a pure function of its inputs.
/// Timing and cache behaviour live in [`RuntimeStats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format: String,
    pub version: u32,
    pub template: TemplateId,
    pub decode: DecodeSettings,
    pub objectives: Vec<ObjectiveSpec>,
    pub strategies: Vec<Strategy>,
    pub corpus_size: usize,
    pub aggregates: Vec<Aggregate>,
    pub rows: Vec<SentenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub wall_time_secs: f64,
    pub parallelism: usize,
    pub cache_lookups: u64,
    pub cache_hits: u64,
    pub cache_hit_rate: f64,
    pub source_calls: u64,
    pub main_queries: u64,
    pub aux_queries: u64,
    pub transport_errors: usize,
}

impl MetricsReport {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, RunnerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
        let report: Self = serde_json::from_str(&text)
            .map_err(|e| RunnerError::Config(format!("{} is not a report: {e}", path.display())))?;
        if report.format != REPORT_FORMAT {
            return Err(RunnerError::Config(format!("{} is not a report", path.display())));
        }
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn aggregate(&self, kind: ObjectiveKind, strategy: Strategy) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.objective == kind && a.strategy == strategy)
    }

    /// Rows of one (objective, strategy) group, in id order.
    pub fn group_rows(&self, kind: ObjectiveKind, strategy: Strategy) -> Vec<&SentenceRow> {
        self.rows
            .iter()
            .filter(|r| r.objective == kind && r.strategy == strategy)
            .collect()
    }

    /// Wide table: one column per objective (fixed order), one row
    /// per metric and strategy.
    pub fn to_tsv(&self) -> String {
        let kinds: Vec<ObjectiveKind> = ObjectiveKind::ALL
            .into_iter()
            .filter(|k| self.objectives.iter().any(|s| s.kind == *k))
            .collect();
        let mut out = String::from("strategy\tmetric");
        for k in &kinds {
            let _ = write!(out, "\t{k}");
        }
        out.push('\n');
        let metrics: [(&str, CellFn); 7] = [
            ("weight", |a| format!("{}", a.weight)),
            ("bleu", |a| format!("{:.2}", a.bleu.score)),
            ("reg", |a| format!("{:.2}", a.reg)),
            ("mer", |a| a.mer.map_or("n/a".to_string(), |m| format!("{m:.2}"))),
            ("empty", |a| a.failures.empty.to_string()),
            ("source-language", |a| a.failures.source_language.to_string()),
            ("errors", |a| a.errors.to_string()),
        ];
        for strategy in &self.strategies {
            for (name, cell) in &metrics {
                let _ = write!(out, "{strategy}\t{name}");
                for k in &kinds {
                    let value = self.aggregate(*k, *strategy).map_or(String::new(), cell);
                    let _ = write!(out, "\t{value}");
                }
                out.push('\n');
            }
        }
        out
    }
}

type CellFn = fn(&Aggregate) -> String;

/// Aggregates rows of one (objective, weight, strategy) group. `records`
/// and `rows` are aligned.
pub fn aggregate(
    spec: &ObjectiveSpec,
    strategy: Strategy,
    records: &[&SentenceRecord],
    rows: &[&SentenceRow],
) -> Result<Aggregate, RunnerError> {
    let texts: Vec<&str> = rows.iter().map(|r| r.text.as_str()).collect();
    let refs: Vec<&str> = rows.iter().map(|r| r.reference.as_str()).collect();
    let mer = mer_counts(records, &texts)?;
    Ok(Aggregate {
        objective: spec.kind,
        weight: spec.weight,
        strategy,
        sentences: rows.len(),
        bleu: corpus_bleu(&texts, &refs)?,
        reg: reg(&texts)?,
        mer: mer.rate(),
        mer_counts: mer,
        failures: FailureCounts::tally(rows.iter().map(|r| r.failure)),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        main_queries: rows.iter().map(|r| r.main_queries).sum(),
        aux_queries: rows.iter().map(|r| r.aux_queries).sum(),
    })
}

/// Sentence-level BLEU of a row, recomputed from its stored texts.
pub fn row_bleu(row: &SentenceRow) -> f64 {
    sentence_bleu(&row.text, &row.reference).score
}

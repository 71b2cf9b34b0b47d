//! Experiment orchestration: decode a corpus under several objectives,
//! score the outputs and write report files.
//!
//! Output directory layout after `run`:
//!
//! - `report.json`: aggregates and per-sentence rows (deterministic)
//! - `report.tsv`: one column per objective, one line per metric
//! - `runtime.json`: wall time and cache statistics (varies between runs)

mod compare;
mod config;
mod report;
mod sweep;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::corpus::{
    default_instruction_lang, load_jsonl, render_prompt, CorpusError, SentenceRecord,
};
use crate::decoder::{decode, DecodeConfig, Strategy};
use crate::lm::{CachedSource, LmError, LogitSource, NGramLM, RemoteSource};
use crate::metrics::{failure_label, sentence_bleu, FailureLabel, LangIdModel, MetricsError};
use crate::objectives::{ObjectiveSpec, PromptTokens};

pub use compare::{compare_failures, select_group, Comparison};
pub use config::{
    validate_grid, DecodeSection, ExperimentConfig, ObjectiveEntry, SourceConfig, SweepSection,
};
pub use report::{
    aggregate, row_bleu, Aggregate, DecodeSettings, MetricsReport, RuntimeStats, SentenceRow,
    REPORT_FORMAT,
};
pub use sweep::{run_sweep, SweepOutput, SweepPoint, SweepTable};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunnerError {
    /// 2 for transport failures (unreachable source, error budget spent), 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Transport(_) => 2,
            _ => 1,
        }
    }
}

impl From<CorpusError> for RunnerError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(io) => RunnerError::Config(format!("cannot read corpus: {io}")),
            other => RunnerError::Config(other.to_string()),
        }
    }
}

impl From<MetricsError> for RunnerError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Config(m) => RunnerError::Config(m),
            other => RunnerError::Contract(other.to_string()),
        }
    }
}

impl From<LmError> for RunnerError {
    fn from(e: LmError) -> Self {
        match e {
            LmError::Transport(m) => RunnerError::Transport(m),
            other => RunnerError::Config(other.to_string()),
        }
    }
}

/// The logit source of a config, behind the shared cache.
pub type SharedSource = CachedSource<Box<dyn LogitSource>>;

pub fn open_source(cfg: &ExperimentConfig) -> Result<SharedSource, RunnerError> {
    let inner: Box<dyn LogitSource> = match &cfg.source {
        SourceConfig::Toy { model } => Box::new(NGramLM::load(model).map_err(|e| {
            RunnerError::Config(format!("cannot load toy model {}: {e}", model.display()))
        })?),
        SourceConfig::Remote {
            url,
            max_batch,
            timeout_secs,
        } => {
            let timeout = Duration::from_secs(timeout_secs.unwrap_or(300));
            let mut remote = RemoteSource::connect_with(url, timeout).map_err(|e| match e {
                LmError::Transport(m) => RunnerError::Transport(format!("cannot reach {url}: {m}")),
                other => RunnerError::Config(format!("{url}: {other}")),
            })?;
            if let Some(b) = max_batch {
                remote = remote.with_max_batch(*b);
            }
            Box::new(remote)
        }
    };
    Ok(CachedSource::new(inner, cfg.cache_capacity))
}

/// Trains the failure classifier on the corpus itself: sources under
/// their source language, references under their target language.
pub fn train_langid(records: &[SentenceRecord]) -> Result<LangIdModel, RunnerError> {
    let mut corpora: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for r in records {
        corpora.entry(r.source_lang.clone()).or_default().push(&r.source);
        corpora.entry(r.target_lang.clone()).or_default().push(&r.reference);
    }
    Ok(LangIdModel::train(&corpora)?)
}

pub fn load_records(cfg: &ExperimentConfig) -> Result<Vec<SentenceRecord>, RunnerError> {
    let records = load_jsonl(&cfg.corpus).map_err(|e| match e {
        CorpusError::Io(io) => {
            RunnerError::Config(format!("cannot read corpus {}: {io}", cfg.corpus.display()))
        }
        other => RunnerError::Config(format!("{}: {other}", cfg.corpus.display())),
    })?;
    if records.is_empty() {
        return Err(RunnerError::Config(format!("{} has no records", cfg.corpus.display())));
    }
    Ok(records)
}

/// Decoded rows for every (record, objective, strategy), ordered by record
/// id, then objective kind (ties in the order given), then strategy.
pub struct DecodedRows {
    pub rows: Vec<SentenceRow>,
    /// Record of each row, aligned with `rows`.
    pub record_index: Vec<usize>,
    pub transport_errors: usize,
}

pub fn decode_rows(
    cfg: &ExperimentConfig,
    records: &[SentenceRecord],
    lm: &SharedSource,
    specs: &[ObjectiveSpec],
) -> Result<DecodedRows, RunnerError> {
    let langid = train_langid(records)?;
    let decode_cfg = cfg.decode.decode_config();
    decode_cfg
        .stop_ids(lm)
        .map_err(|e| RunnerError::Config(e.to_string()))?;
    let parts = records
        .iter()
        .map(|r| {
            let lang = cfg
                .instruction_lang
                .clone()
                .unwrap_or_else(|| default_instruction_lang(r).to_string());
            render_prompt(&cfg.template, r, &lang)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| RunnerError::Config(format!("cannot start worker pool: {e}")))?;
    let transport_errors = AtomicUsize::new(0);
    let budget_spent = AtomicBool::new(false);
    let note_error = |e: &LmError| {
        if e.is_transport() {
            let n = transport_errors.fetch_add(1, Ordering::SeqCst) + 1;
            if cfg.error_budget.is_some_and(|b| n > b) {
                budget_spent.store(true, Ordering::SeqCst);
            }
        }
    };

    let prompts: Vec<Result<PromptTokens, String>> = pool.install(|| {
        parts
            .par_iter()
            .map(|p| {
                PromptTokens::encode(lm, p).map_err(|e| {
                    note_error(&e);
                    format!("cannot encode prompt: {e}")
                })
            })
            .collect()
    });

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].id.cmp(&records[b].id));
    let mut spec_order: Vec<usize> = (0..specs.len()).collect();
    spec_order.sort_by_key(|&i| (specs[i].kind, i));
    let mut strategies = cfg.decode.strategies.clone();
    strategies.sort();
    let jobs: Vec<(usize, usize, Strategy)> = order
        .iter()
        .flat_map(|&r| {
            let strategies = &strategies;
            spec_order
                .iter()
                .flat_map(move |&s| strategies.iter().map(move |&st| (r, s, st)))
        })
        .collect();

    let rows: Vec<SentenceRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(r, s, strategy)| {
                let record = &records[r];
                let outcome = if budget_spent.load(Ordering::SeqCst) {
                    Err("skipped: transport error budget exhausted".to_string())
                } else {
                    match &prompts[r] {
                        Err(e) => Err(e.clone()),
                        Ok(prompt) => decode(strategy, lm, &specs[s], prompt, &decode_cfg)
                            .map_err(|e| {
                                if let crate::decoder::DecodeError::Lm(lm_err) = &e {
                                    note_error(lm_err);
                                }
                                e.to_string()
                            }),
                    }
                };
                make_row(record, &specs[s], strategy, outcome, &langid)
            })
            .collect()
    });

    let transport_errors = transport_errors.into_inner();
    if let Some(budget) = cfg.error_budget {
        if transport_errors > budget {
            return Err(RunnerError::Transport(format!(
                "{transport_errors} transport errors exceed the budget of {budget}"
            )));
        }
    }
    Ok(DecodedRows {
        record_index: jobs.iter().map(|&(r, _, _)| r).collect(),
        rows,
        transport_errors,
    })
}

fn make_row(
    record: &SentenceRecord,
    spec: &ObjectiveSpec,
    strategy: Strategy,
    outcome: Result<crate::decoder::DecodeOutput, String>,
    langid: &LangIdModel,
) -> SentenceRow {
    let (text, score, tokens, queries, error) = match outcome {
        Ok(out) => (out.text, Some(out.best.score), out.best.tokens.len(), out.queries, None),
        Err(e) => (String::new(), None, 0, Default::default(), Some(e)),
    };
    let failure = if error.is_some() {
        FailureLabel::Empty
    } else {
        failure_label(record, &text, langid)
    };
    SentenceRow {
        id: record.id.clone(),
        objective: spec.kind,
        weight: spec.weight,
        strategy,
        sentence_bleu: sentence_bleu(&text, &record.reference).score,
        text,
        reference: record.reference.clone(),
        score,
        tokens,
        failure,
        main_queries: queries.main_queries,
        aux_queries: queries.aux_queries,
        error,
    }
}

/// Aggregates for every (objective, strategy) group in row order.
pub fn aggregate_rows(
    records: &[SentenceRecord],
    decoded: &DecodedRows,
    specs: &[ObjectiveSpec],
    strategies: &[Strategy],
) -> Result<Vec<Aggregate>, RunnerError> {
    let mut spec_order: Vec<usize> = (0..specs.len()).collect();
    spec_order.sort_by_key(|&i| (specs[i].kind, i));
    let mut strategies = strategies.to_vec();
    strategies.sort();
    let mut out = Vec::new();
    for &s in &spec_order {
        let spec = &specs[s];
        for &strategy in &strategies {
            let (recs, rows): (Vec<&SentenceRecord>, Vec<&SentenceRow>) = decoded
                .rows
                .iter()
                .zip(&decoded.record_index)
                .filter(|(row, _)| {
                    row.objective == spec.kind
                        && row.weight.to_bits() == spec.weight.to_bits()
                        && row.strategy == strategy
                })
                .map(|(row, &r)| (&records[r], row))
                .unzip();
            out.push(aggregate(spec, strategy, &recs, &rows)?);
        }
    }
    Ok(out)
}

pub fn decode_settings(cfg: &DecodeConfig, lm: &SharedSource) -> Result<DecodeSettings, RunnerError> {
    Ok(DecodeSettings {
        beam_width: cfg.beam_width,
        max_new_tokens: cfg.max_new_tokens,
        stop_token_ids: cfg.stop_ids(lm).map_err(|e| RunnerError::Config(e.to_string()))?,
        gamma_origin: cfg.gamma_origin,
    })
}

pub struct RunOutput {
    pub report: MetricsReport,
    pub runtime: RuntimeStats,
}

fn runtime_stats(
    started: Instant,
    cfg: &ExperimentConfig,
    lm: &SharedSource,
    decoded: &DecodedRows,
) -> RuntimeStats {
    let cache = lm.stats();
    RuntimeStats {
        wall_time_secs: started.elapsed().as_secs_f64(),
        parallelism: cfg.parallelism,
        cache_lookups: cache.lookups,
        cache_hits: cache.hits,
        cache_hit_rate: cache.hit_rate(),
        source_calls: cache.misses,
        main_queries: decoded.rows.iter().map(|r| r.main_queries).sum(),
        aux_queries: decoded.rows.iter().map(|r| r.aux_queries).sum(),
        transport_errors: decoded.transport_errors,
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunnerError> {
    let started = Instant::now();
    cfg.validate()?;
    let records = load_records(cfg)?;
    let lm = open_source(cfg)?;
    let specs = cfg.objective_specs()?;
    let decoded = decode_rows(cfg, &records, &lm, &specs)?;
    let aggregates = aggregate_rows(&records, &decoded, &specs, &cfg.decode.strategies)?;
    let mut strategies = cfg.decode.strategies.clone();
    strategies.sort();
    let mut objectives = specs.clone();
    objectives.sort_by_key(|s| s.kind);
    let report = MetricsReport {
        format: REPORT_FORMAT.to_string(),
        version: 1,
        template: cfg.template.clone(),
        decode: decode_settings(&cfg.decode.decode_config(), &lm)?,
        objectives,
        strategies,
        corpus_size: records.len(),
        aggregates,
        rows: decoded.rows.clone(),
    };
    let runtime = runtime_stats(started, cfg, &lm, &decoded);
    Ok(RunOutput { report, runtime })
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), RunnerError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

pub(crate) fn runtime_json(runtime: &RuntimeStats) -> String {
    let mut s = serde_json::to_string_pretty(runtime).expect("runtime serializes");
    s.push('\n');
    s
}

impl RunOutput {
    /// Writes `report.json`, `report.tsv` and `runtime.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), RunnerError> {
        write_file(dir, "report.json", &self.report.to_json())?;
        write_file(dir, "report.tsv", &self.report.to_tsv())?;
        write_file(dir, "runtime.json", &runtime_json(&self.runtime))
    }
}

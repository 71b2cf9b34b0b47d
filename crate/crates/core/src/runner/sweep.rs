use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    aggregate_rows, decode_rows, load_records, open_source, runtime_json, runtime_stats,
    validate_grid, write_file, Aggregate, ExperimentConfig, RunnerError, RuntimeStats,
};
use crate::decoder::Strategy;
use crate::objectives::{ObjectiveKind, ObjectiveSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub objective: ObjectiveKind,
    pub weight: f64,
    pub strategy: Strategy,
    pub bleu: f64,
    pub reg: f64,
    pub mer: Option<f64>,
    pub empty: usize,
    pub source_language: usize,
    pub errors: usize,
}

impl From<&Aggregate> for SweepPoint {
    fn from(a: &Aggregate) -> Self {
        Self {
            objective: a.objective,
            weight: a.weight,
            strategy: a.strategy,
            bleu: a.bleu.score,
            reg: a.reg,
            mer: a.mer,
            empty: a.failures.empty,
            source_language: a.failures.source_language,
            errors: a.errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub objective: ObjectiveKind,
    pub grid: Vec<f64>,
    /// The base objective under the same settings, one point per strategy.
    pub base: Vec<SweepPoint>,
    /// One point per grid weight and strategy, in grid order.
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sweep serializes");
        s.push('\n');
        s
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("objective\tweight\tstrategy\tbleu\treg\tmer\tempty\tsource-language\terrors\n");
        for p in self.base.iter().chain(&self.points) {
            let weight = if p.objective == ObjectiveKind::Base {
                "-".to_string()
            } else {
                p.weight.to_string()
            };
            let mer = p.mer.map_or("n/a".to_string(), |m| format!("{m:.4}"));
            let _ = writeln!(
                out,
                "{}\t{weight}\t{}\t{:.4}\t{:.4}\t{mer}\t{}\t{}\t{}",
                p.objective, p.strategy, p.bleu, p.reg, p.empty, p.source_language, p.errors
            );
        }
        out
    }
}

pub struct SweepOutput {
    pub table: SweepTable,
    pub runtime: RuntimeStats,
}

impl SweepOutput {
    /// Writes `sweep.json`, `sweep.tsv` and `sweep_runtime.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), RunnerError> {
        write_file(dir, "sweep.json", &self.table.to_json())?;
        write_file(dir, "sweep.tsv", &self.table.to_tsv())?;
        write_file(dir, "sweep_runtime.json", &runtime_json(&self.runtime))
    }
}

/// Decodes the corpus once with the base objective and once per grid weight
/// of `kind`, sharing one cache.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    kind: ObjectiveKind,
    grid: &[f64],
) -> Result<SweepOutput, RunnerError> {
    let started = Instant::now();
    if kind == ObjectiveKind::Base {
        return Err(RunnerError::Config("the base objective has no weight to sweep".into()));
    }
    validate_grid(grid)?;
    let records = load_records(cfg)?;
    let lm = open_source(cfg)?;
    let mut specs = vec![ObjectiveSpec::base()];
    for &w in grid {
        specs.push(ObjectiveSpec::new(kind, w).map_err(|e| RunnerError::Config(e.to_string()))?);
    }
    let decoded = decode_rows(cfg, &records, &lm, &specs)?;
    let aggregates = aggregate_rows(&records, &decoded, &specs, &cfg.decode.strategies)?;
    let (base, points): (Vec<&Aggregate>, Vec<&Aggregate>) = aggregates
        .iter()
        .partition(|a| a.objective == ObjectiveKind::Base);
    let table = SweepTable {
        objective: kind,
        grid: grid.to_vec(),
        base: base.into_iter().map(SweepPoint::from).collect(),
        points: points.into_iter().map(SweepPoint::from).collect(),
    };
    let runtime = runtime_stats(started, cfg, &lm, &decoded);
    Ok(SweepOutput { table, runtime })
}

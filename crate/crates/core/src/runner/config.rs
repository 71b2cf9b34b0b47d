use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::corpus::TemplateId;
use crate::decoder::{DecodeConfig, Strategy};
use crate::lm::{CachedSource, NGramLM, TokenId};
use crate::objectives::{GammaOrigin, ObjectiveKind, ObjectiveSpec, SWEEP_GRID};

/// Where next-token distributions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    /// A model file written by `decode train-toy`.
    Toy { model: PathBuf },
    /// A logit server.
    Remote {
        url: String,
        #[serde(default)]
        max_batch: Option<usize>,
        #[serde(default)]
        timeout_secs: Option<u64>,
    },
}

/// `"alm-x"` or `{"kind": "alm-x", "weight": 0.5}`; a bare name uses the default weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectiveEntry {
    Name(ObjectiveKind),
    Weighted {
        kind: ObjectiveKind,
        #[serde(default)]
        weight: Option<f64>,
    },
}

impl ObjectiveEntry {
    pub fn spec(&self) -> Result<ObjectiveSpec, RunnerError> {
        let (kind, weight) = match *self {
            ObjectiveEntry::Name(kind) => (kind, None),
            ObjectiveEntry::Weighted { kind, weight } => (kind, weight),
        };
        ObjectiveSpec::new(kind, weight.unwrap_or_else(|| kind.default_weight()))
            .map_err(|e| RunnerError::Config(e.to_string()))
    }
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::Greedy]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSection {
    pub beam_width: usize,
    pub max_new_tokens: usize,
    pub stop_token_ids: Option<Vec<TokenId>>,
    pub gamma_origin: GammaOrigin,
    pub strategies: Vec<Strategy>,
}

impl Default for DecodeSection {
    fn default() -> Self {
        let d = DecodeConfig::default();
        Self {
            beam_width: d.beam_width,
            max_new_tokens: d.max_new_tokens,
            stop_token_ids: d.stop_token_ids,
            gamma_origin: d.gamma_origin,
            strategies: default_strategies(),
        }
    }
}

impl DecodeSection {
    pub fn decode_config(&self) -> DecodeConfig {
        DecodeConfig {
            beam_width: self.beam_width,
            max_new_tokens: self.max_new_tokens,
            stop_token_ids: self.stop_token_ids.clone(),
            gamma_origin: self.gamma_origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub objective: ObjectiveKind,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
}

fn default_parallelism() -> usize {
    1
}

fn default_cache_capacity() -> usize {
    CachedSource::<NGramLM>::DEFAULT_CAPACITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub source: SourceConfig,
    pub objectives: Vec<ObjectiveEntry>,
    #[serde(default)]
    pub decode: DecodeSection,
    #[serde(default)]
    pub template: TemplateId,
    /// Overrides the per-record instruction language.
    #[serde(default)]
    pub instruction_lang: Option<String>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Output directory.
    pub output: PathBuf,
    /// Reserved: every code path is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cache_capacity")]
    pub cache_capacity: usize,
    /// Transport errors tolerated before the run is abandoned; unlimited when absent.
    #[serde(default)]
    pub error_budget: Option<usize>,
}

impl ExperimentConfig {
    /// Reads a config file; relative paths inside it are resolved against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunnerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, RunnerError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| RunnerError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.corpus);
        resolve(&mut self.output);
        if let SourceConfig::Toy { model } = &mut self.source {
            resolve(model);
        }
    }

    pub fn objective_specs(&self) -> Result<Vec<ObjectiveSpec>, RunnerError> {
        self.objectives.iter().map(ObjectiveEntry::spec).collect()
    }

    pub fn sweep_grid(&self) -> Vec<f64> {
        self.sweep
            .as_ref()
            .and_then(|s| s.grid.clone())
            .unwrap_or_else(|| SWEEP_GRID.to_vec())
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let specs = self.objective_specs()?;
        if specs.is_empty() {
            return Err(RunnerError::Config("at least one objective is required".into()));
        }
        let mut kinds: Vec<_> = specs.iter().map(|s| s.kind).collect();
        kinds.sort();
        if kinds.windows(2).any(|w| w[0] == w[1]) {
            return Err(RunnerError::Config(
                "each objective kind may appear once; use a sweep to compare weights".into(),
            ));
        }
        for spec in &specs {
            if spec.outside_sweep_range() {
                log::warn!("{spec} is outside the explored weight range [-0.1, 1.0]");
            }
        }
        if self.parallelism == 0 {
            return Err(RunnerError::Config("parallelism must be at least 1".into()));
        }
        if self.decode.strategies.is_empty() {
            return Err(RunnerError::Config("at least one decode strategy is required".into()));
        }
        let mut strategies = self.decode.strategies.clone();
        strategies.sort();
        strategies.dedup();
        if strategies.len() != self.decode.strategies.len() {
            return Err(RunnerError::Config("decode strategies must be distinct".into()));
        }
        self.decode
            .decode_config()
            .validate()
            .map_err(|e| RunnerError::Config(e.to_string()))?;
        if let Some(sweep) = &self.sweep {
            if sweep.objective == ObjectiveKind::Base {
                return Err(RunnerError::Config("the base objective has no weight to sweep".into()));
            }
            if let Some(grid) = &sweep.grid {
                validate_grid(grid)?;
            }
        }
        Ok(())
    }
}

pub fn validate_grid(grid: &[f64]) -> Result<(), RunnerError> {
    if grid.is_empty() {
        return Err(RunnerError::Config("sweep grid is empty".into()));
    }
    if let Some(w) = grid.iter().find(|w| !w.is_finite()) {
        return Err(RunnerError::Config(format!("sweep weight {w} is not finite")));
    }
    Ok(())
}

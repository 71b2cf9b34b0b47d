//! Contrastive decoding objectives.
//!
//! Each objective scores the next token as
//!
//! ```text
//! score(y_t) = log p(y_t | prompt, y_<t) - w(t) * log p_aux(y_t)
//! ```
//!
//! | kind    | auxiliary context   | w(t)      |
//! |---------|---------------------|-----------|
//! | `base`  | none                | 0         |
//! | `pmi-u` | instruction ++ y_<t | alpha     |
//! | `pmi-x` | source ++ y_<t      | alpha     |
//! | `alm-u` | instruction         | gamma^t   |
//! | `alm-x` | source              | gamma^t   |
//!
//! The anti-LM kinds penalize the first-token continuation of a fixed
//! context, so their auxiliary vector is computed once per sentence; the
//! PMI kinds need a fresh auxiliary query at every step. Steps are 1-based:
//! the first generated token is `t = 1`. Scores are not renormalized.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::PromptParts;
use crate::lm::{LmError, LogProbVector, LogitSource, TokenId, TokenSeq};

pub const DEFAULT_PMI_WEIGHT: f64 = 0.1;
pub const DEFAULT_ALM_DECAY: f64 = 0.3;
/// Weights explored by the default hyperparameter sweep.
pub const SWEEP_GRID: [f64; 6] = [-0.1, 0.1, 0.3, 0.5, 0.8, 1.0];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ObjectiveError {
    #[error("objective weight must be finite, got {0}")]
    NonFiniteWeight(f64),
    #[error("unknown objective {0:?} (expected base, pmi-u, pmi-x, alm-u or alm-x)")]
    UnknownKind(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Base,
    PmiU,
    PmiX,
    AlmU,
    AlmX,
}

impl ObjectiveKind {
    /// All kinds, in report column order.
    pub const ALL: [ObjectiveKind; 5] = [
        ObjectiveKind::Base,
        ObjectiveKind::PmiU,
        ObjectiveKind::PmiX,
        ObjectiveKind::AlmU,
        ObjectiveKind::AlmX,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Base => "base",
            ObjectiveKind::PmiU => "pmi-u",
            ObjectiveKind::PmiX => "pmi-x",
            ObjectiveKind::AlmU => "alm-u",
            ObjectiveKind::AlmX => "alm-x",
        }
    }

    pub fn is_pmi(self) -> bool {
        matches!(self, ObjectiveKind::PmiU | ObjectiveKind::PmiX)
    }

    pub fn is_alm(self) -> bool {
        matches!(self, ObjectiveKind::AlmU | ObjectiveKind::AlmX)
    }

    pub fn default_weight(self) -> f64 {
        match self {
            ObjectiveKind::Base => 0.0,
            ObjectiveKind::PmiU | ObjectiveKind::PmiX => DEFAULT_PMI_WEIGHT,
            ObjectiveKind::AlmU | ObjectiveKind::AlmX => DEFAULT_ALM_DECAY,
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectiveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ObjectiveError::UnknownKind(s.to_string()))
    }
}

/// Which exponent the anti-LM decay uses at the first generated token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaOrigin {
    /// `gamma^t` with `t = 1` at the first token.
    #[default]
    OneBased,
    /// `gamma^(t-1)`: the first token gets the full penalty.
    ZeroBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// `alpha` for PMI kinds, `gamma` for anti-LM kinds, ignored for base.
    pub weight: f64,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, weight: f64) -> Result<Self, ObjectiveError> {
        if !weight.is_finite() {
            return Err(ObjectiveError::NonFiniteWeight(weight));
        }
        Ok(Self { kind, weight })
    }

    pub fn base() -> Self {
        Self {
            kind: ObjectiveKind::Base,
            weight: 0.0,
        }
    }

    pub fn with_default_weight(kind: ObjectiveKind) -> Self {
        Self {
            kind,
            weight: kind.default_weight(),
        }
    }

    /// Weights outside `[-0.1, 1.0]` are allowed but were never swept.
    pub fn outside_sweep_range(&self) -> bool {
        self.kind != ObjectiveKind::Base && !(-0.1..=1.0).contains(&self.weight)
    }

    /// Penalty weight at 1-based step `t`; `None` for base.
    pub fn penalty_weight(&self, t: usize, origin: GammaOrigin) -> Option<f64> {
        match self.kind {
            ObjectiveKind::Base => None,
            ObjectiveKind::PmiU | ObjectiveKind::PmiX => Some(self.weight),
            ObjectiveKind::AlmU | ObjectiveKind::AlmX => {
                let exponent = match origin {
                    GammaOrigin::OneBased => t,
                    GammaOrigin::ZeroBased => t.saturating_sub(1),
                };
                Some(self.weight.powi(exponent.min(i32::MAX as usize) as i32))
            }
        }
    }
}

impl fmt::Display for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind == ObjectiveKind::Base {
            f.write_str("base")
        } else {
            write!(f, "{}@{}", self.kind, self.weight)
        }
    }
}

/// A prompt encoded with a source's tokenizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTokens {
    /// The full rendered prompt.
    pub prompt: TokenSeq,
    /// The instruction `u` alone.
    pub instruction: TokenSeq,
    /// The source sentence `x` alone.
    pub source: TokenSeq,
}

impl PromptTokens {
    pub fn encode<S: LogitSource + ?Sized>(lm: &S, parts: &PromptParts) -> Result<Self, LmError> {
        Ok(Self {
            prompt: lm.tokenize(&parts.rendered)?,
            instruction: lm.tokenize(&parts.instruction_text)?,
            source: lm.tokenize(&parts.source_text)?,
        })
    }
}

/// The token contexts to query at one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepContexts {
    pub main: TokenSeq,
    pub aux: Option<TokenSeq>,
    /// True when `aux` does not depend on the step (anti-LM kinds).
    pub aux_is_static: bool,
}

fn concat(head: &[TokenId], tail: &[TokenId]) -> TokenSeq {
    let mut out = Vec::with_capacity(head.len() + tail.len());
    out.extend_from_slice(head);
    out.extend_from_slice(tail);
    out
}

/// Contexts needed to score step `t` after `prefix` (which has `t - 1` tokens).
pub fn required_contexts(
    kind: ObjectiveKind,
    prompt: &PromptTokens,
    prefix: &[TokenId],
    t: usize,
) -> StepContexts {
    debug_assert!(t >= 1 && prefix.len() + 1 == t, "step {t} with prefix of {}", prefix.len());
    let main = concat(&prompt.prompt, prefix);
    let (aux, aux_is_static) = match kind {
        ObjectiveKind::Base => (None, false),
        ObjectiveKind::PmiU => (Some(concat(&prompt.instruction, prefix)), false),
        ObjectiveKind::PmiX => (Some(concat(&prompt.source, prefix)), false),
        ObjectiveKind::AlmU => (Some(prompt.instruction.clone()), true),
        ObjectiveKind::AlmX => (Some(prompt.source.clone()), true),
    };
    StepContexts {
        main,
        aux,
        aux_is_static,
    }
}

/// The static anti-LM context of a prompt, if the kind has one.
pub fn static_aux_context(kind: ObjectiveKind, prompt: &PromptTokens) -> Option<&[TokenId]> {
    match kind {
        ObjectiveKind::AlmU => Some(&prompt.instruction),
        ObjectiveKind::AlmX => Some(&prompt.source),
        _ => None,
    }
}

/// Applies the objective at step `t`: `base - w(t) * aux`, elementwise.
///
/// Tokens the main model gives zero probability stay at `-inf`. A zero
/// weight returns `base` unchanged.
pub fn adjust(
    base: &LogProbVector,
    aux: Option<&LogProbVector>,
    spec: &ObjectiveSpec,
    t: usize,
    origin: GammaOrigin,
) -> Result<Vec<f64>, ObjectiveError> {
    if t == 0 {
        return Err(ObjectiveError::Contract("steps are 1-based".into()));
    }
    let weight = match spec.penalty_weight(t, origin) {
        None | Some(0.0) => return Ok(base.values().to_vec()),
        Some(w) => w,
    };
    let aux = aux.ok_or_else(|| {
        ObjectiveError::Contract(format!("{} needs an auxiliary vector", spec.kind))
    })?;
    if aux.len() != base.len() {
        return Err(ObjectiveError::Contract(format!(
            "auxiliary vector has length {}, main vector {}",
            aux.len(),
            base.len()
        )));
    }
    Ok(base
        .values()
        .iter()
        .zip(aux.values())
        .map(|(&b, &a)| if b == f64::NEG_INFINITY { b } else { b - weight * a })
        .collect())
}

/// Memo for the anti-LM penalty vector of one sentence.
///
/// The vector depends only on the sentence, so it is queried on first use
/// and reused for every later step and hypothesis.
#[derive(Debug)]
pub struct AlmPenalty {
    context: TokenSeq,
    vector: Option<LogProbVector>,
    queries: u64,
}

impl AlmPenalty {
    /// `None` for kinds without a static auxiliary context.
    pub fn new(kind: ObjectiveKind, prompt: &PromptTokens) -> Option<Self> {
        static_aux_context(kind, prompt).map(|ctx| Self {
            context: ctx.to_vec(),
            vector: None,
            queries: 0,
        })
    }

    pub fn context(&self) -> &[TokenId] {
        &self.context
    }

    pub fn get<S: LogitSource + ?Sized>(&mut self, lm: &S) -> Result<&LogProbVector, LmError> {
        if self.vector.is_none() {
            self.queries += 1;
            self.vector = Some(lm.next_logprobs(&self.context)?);
        }
        Ok(self.vector.as_ref().expect("just filled"))
    }

    /// Queries issued so far (0 or 1).
    pub fn queries(&self) -> u64 {
        self.queries
    }
}

/// `log p(y_1 | x)` (or `| u`) for an anti-LM objective, computed directly.
pub fn alm_penalty<S: LogitSource + ?Sized>(
    lm: &S,
    spec: &ObjectiveSpec,
    prompt: &PromptTokens,
) -> Result<LogProbVector, LmError> {
    let mut memo = AlmPenalty::new(spec.kind, prompt).ok_or_else(|| {
        LmError::Config(format!("{} has no anti-LM penalty", spec.kind))
    })?;
    memo.get(lm).cloned()
}

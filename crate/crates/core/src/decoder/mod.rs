//! Greedy and beam decoding over objective-adjusted scores.
//!
//! Scores are cumulative sums of per-step adjusted scores, added left to
//! right from `0.0`, so replaying a hypothesis reproduces its score exactly.
//! Ties go to the lowest token id (greedy) or the lexicographically smallest
//! token sequence (beam). Tokens whose adjusted score is not finite are
//! never selected.

mod beam;
mod exhaustive;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lm::{LmError, LogitSource, TokenId, TokenSeq};
use crate::objectives::{
    adjust, required_contexts, AlmPenalty, GammaOrigin, ObjectiveError, ObjectiveSpec,
    PromptTokens,
};

pub use beam::beam_decode;
pub use exhaustive::{exhaustive_argmax, EXHAUSTIVE_GUARD};

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("invalid decode configuration: {0}")]
    Config(String),
    #[error("no token has a finite score at step {step}")]
    NoCandidates { step: usize },
    #[error("search space of {vocab_size}^{max_len} sequences exceeds the limit of {limit}")]
    GuardExceeded {
        vocab_size: usize,
        max_len: usize,
        limit: u64,
    },
}

impl DecodeError {
    pub fn is_transport(&self) -> bool {
        matches!(self, DecodeError::Lm(e) if e.is_transport())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Greedy,
    Beam,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::Beam => "beam",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = DecodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "beam" => Ok(Strategy::Beam),
            _ => Err(DecodeError::Config(format!("unknown strategy {s:?} (expected greedy or beam)"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub beam_width: usize,
    pub max_new_tokens: usize,
    /// `None` means end-of-sequence plus newline, as reported by the source.
    pub stop_token_ids: Option<Vec<TokenId>>,
    pub gamma_origin: GammaOrigin,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_width: 5,
            max_new_tokens: 128,
            stop_token_ids: None,
            gamma_origin: GammaOrigin::OneBased,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.beam_width == 0 {
            return Err(DecodeError::Config("beam_width must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(DecodeError::Config("max_new_tokens must be at least 1".into()));
        }
        Ok(())
    }

    /// Sorted, deduplicated stop ids, checked against the vocabulary.
    pub fn stop_ids<S: LogitSource + ?Sized>(&self, lm: &S) -> Result<Vec<TokenId>, DecodeError> {
        let mut ids = match &self.stop_token_ids {
            Some(ids) => ids.clone(),
            None => lm.special_tokens().default_stop_ids(),
        };
        ids.sort_unstable();
        ids.dedup();
        if let Some(bad) = ids.iter().find(|&&id| id as usize >= lm.vocab_size()) {
            return Err(DecodeError::Config(format!(
                "stop token {bad} outside vocabulary of size {}",
                lm.vocab_size()
            )));
        }
        Ok(ids)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinishReason {
    StopToken,
    MaxLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Generated tokens, including the stop token when there is one.
    pub tokens: TokenSeq,
    pub score: f64,
    pub finished: bool,
    pub finish_reason: Option<FinishReason>,
}

impl Hypothesis {
    /// Generated tokens without a trailing stop token.
    pub fn content(&self) -> &[TokenId] {
        match (self.finish_reason, self.tokens.split_last()) {
            (Some(FinishReason::StopToken), Some((_, rest))) => rest,
            _ => &self.tokens,
        }
    }
}

/// Contexts the decoder asked the source for during one decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    pub main_queries: u64,
    pub aux_queries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutput {
    pub best: Hypothesis,
    /// Finished hypotheses in rank order (beam only).
    pub all_finished: Vec<Hypothesis>,
    /// Adjusted score of each token of `best`.
    pub per_step_scores: Vec<f64>,
    pub text: String,
    pub queries: QueryStats,
}

/// Descending score, then lexicographically smallest tokens.
pub(crate) fn rank(a_score: f64, a_tokens: &[TokenId], b_score: f64, b_tokens: &[TokenId]) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_tokens.cmp(b_tokens))
}

/// Computes adjusted next-token scores for one sentence under one objective.
///
/// Owns the anti-LM memo, so the static auxiliary vector is fetched at most
/// once however many steps and hypotheses are scored.
pub struct StepScorer<'a, S: ?Sized> {
    lm: &'a S,
    spec: ObjectiveSpec,
    prompt: &'a PromptTokens,
    origin: GammaOrigin,
    alm: Option<AlmPenalty>,
    stats: QueryStats,
}

impl<'a, S: LogitSource + ?Sized> StepScorer<'a, S> {
    pub fn new(lm: &'a S, spec: ObjectiveSpec, prompt: &'a PromptTokens, origin: GammaOrigin) -> Self {
        Self {
            lm,
            spec,
            prompt,
            origin,
            alm: AlmPenalty::new(spec.kind, prompt),
            stats: QueryStats::default(),
        }
    }

    pub fn stats(&self) -> QueryStats {
        self.stats
    }

    /// Scores every prefix at step `t`; all prefixes must have `t - 1` tokens.
    pub fn score(&mut self, prefixes: &[&[TokenId]], t: usize) -> Result<Vec<Vec<f64>>, DecodeError> {
        let kind = self.spec.kind;
        let penalized = self.spec.penalty_weight(t, self.origin).is_some_and(|w| w != 0.0);
        let pmi_aux = kind.is_pmi() && penalized;
        let mut contexts: Vec<TokenSeq> = Vec::with_capacity(prefixes.len() * 2);
        let mut n_aux = 0;
        for prefix in prefixes {
            contexts.push(required_contexts(kind, self.prompt, prefix, t).main);
        }
        if pmi_aux {
            for prefix in prefixes {
                let aux = required_contexts(kind, self.prompt, prefix, t).aux;
                contexts.push(aux.expect("pmi kinds have an auxiliary context"));
                n_aux += 1;
            }
        }
        let vectors = self.lm.next_logprobs_batch(&contexts)?;
        self.stats.main_queries += prefixes.len() as u64;
        self.stats.aux_queries += n_aux as u64;
        let (mains, auxes) = vectors.split_at(prefixes.len());
        let static_aux = match &mut self.alm {
            Some(memo) if penalized => {
                let before = memo.queries();
                let v = memo.get(self.lm)?.clone();
                self.stats.aux_queries += memo.queries() - before;
                Some(v)
            }
            _ => None,
        };
        mains
            .iter()
            .enumerate()
            .map(|(i, main)| {
                let aux = if pmi_aux {
                    Some(&auxes[i])
                } else {
                    static_aux.as_ref()
                };
                Ok(adjust(main, aux, &self.spec, t, self.origin)?)
            })
            .collect()
    }
}

/// Greedy decoding: appends the highest-scoring token until a stop token or
/// `max_new_tokens`. `cfg.beam_width` is ignored.
pub fn greedy_decode<S: LogitSource + ?Sized>(
    lm: &S,
    spec: &ObjectiveSpec,
    prompt: &PromptTokens,
    cfg: &DecodeConfig,
) -> Result<DecodeOutput, DecodeError> {
    cfg.validate()?;
    let stop_ids = cfg.stop_ids(lm)?;
    let mut scorer = StepScorer::new(lm, *spec, prompt, cfg.gamma_origin);
    let mut tokens: TokenSeq = Vec::new();
    let mut steps = Vec::new();
    let mut score = 0.0;
    let mut reason = FinishReason::MaxLength;
    for t in 1..=cfg.max_new_tokens {
        let scores = scorer.score(&[&tokens], t)?.pop().expect("one prefix");
        let mut best: Option<(TokenId, f64)> = None;
        for (id, &s) in scores.iter().enumerate() {
            if !s.is_finite() {
                continue;
            }
            let total = score + s;
            if best.is_none_or(|(_, b)| total > b) {
                best = Some((id as TokenId, total));
            }
        }
        let (id, total) = best.ok_or(DecodeError::NoCandidates { step: t })?;
        steps.push(scores[id as usize]);
        tokens.push(id);
        score = total;
        if stop_ids.binary_search(&id).is_ok() {
            reason = FinishReason::StopToken;
            break;
        }
    }
    let best = Hypothesis {
        tokens,
        score,
        finished: true,
        finish_reason: Some(reason),
    };
    let text = lm.detokenize(best.content())?;
    Ok(DecodeOutput {
        best,
        all_finished: Vec::new(),
        per_step_scores: steps,
        text,
        queries: scorer.stats(),
    })
}

pub fn decode<S: LogitSource + ?Sized>(
    strategy: Strategy,
    lm: &S,
    spec: &ObjectiveSpec,
    prompt: &PromptTokens,
    cfg: &DecodeConfig,
) -> Result<DecodeOutput, DecodeError> {
    match strategy {
        Strategy::Greedy => greedy_decode(lm, spec, prompt, cfg),
        Strategy::Beam => beam_decode(lm, spec, prompt, cfg),
    }
}

/// Recomputes the cumulative adjusted score of `tokens` step by step.
pub fn replay_score<S: LogitSource + ?Sized>(
    lm: &S,
    spec: &ObjectiveSpec,
    prompt: &PromptTokens,
    origin: GammaOrigin,
    tokens: &[TokenId],
) -> Result<f64, DecodeError> {
    let mut scorer = StepScorer::new(lm, *spec, prompt, origin);
    let mut total = 0.0;
    for (i, &id) in tokens.iter().enumerate() {
        let scores = scorer.score(&[&tokens[..i]], i + 1)?.pop().expect("one prefix");
        total += scores[id as usize];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{CachedSource, NGramLM};
    use crate::objectives::ObjectiveKind;

    fn bos_prompt(lm: &NGramLM) -> PromptTokens {
        let bos = lm.vocab().bos_id();
        PromptTokens {
            prompt: vec![bos],
            instruction: vec![bos],
            source: vec![bos],
        }
    }

    #[test]
    fn greedy_on_repeated_a_stops_at_length_limit() {
        let lm = NGramLM::train(&["a a a"], 2, 0.01).unwrap();
        let cfg = DecodeConfig {
            max_new_tokens: 3,
            ..DecodeConfig::default()
        };
        let out = greedy_decode(&lm, &ObjectiveSpec::base(), &bos_prompt(&lm), &cfg).unwrap();
        assert_eq!(out.text, "a a a");
        assert_eq!(out.best.finish_reason, Some(FinishReason::MaxLength));
        assert_eq!(out.per_step_scores.len(), 3);
    }

    #[test]
    fn greedy_with_long_history_emits_stop() {
        let lm = NGramLM::train(&["a a a"], 4, 0.01).unwrap();
        let out = greedy_decode(&lm, &ObjectiveSpec::base(), &bos_prompt(&lm), &DecodeConfig::default())
            .unwrap();
        assert_eq!(out.text, "a a a");
        assert_eq!(out.best.finish_reason, Some(FinishReason::StopToken));
        assert_eq!(out.best.tokens.len(), 4);
        assert_eq!(*out.best.tokens.last().unwrap(), lm.vocab().eos_id());
    }

    #[test]
    fn score_is_replayable() {
        let lm = NGramLM::train(&["a b c a", "c b a", "b b c"], 2, 0.5).unwrap();
        let prompt = PromptTokens {
            prompt: lm.vocab().tokenize("a b"),
            instruction: lm.vocab().tokenize("c"),
            source: lm.vocab().tokenize("b"),
        };
        let cfg = DecodeConfig {
            max_new_tokens: 6,
            ..DecodeConfig::default()
        };
        for kind in ObjectiveKind::ALL {
            let spec = ObjectiveSpec::with_default_weight(kind);
            let out = greedy_decode(&lm, &spec, &prompt, &cfg).unwrap();
            let replay = replay_score(&lm, &spec, &prompt, cfg.gamma_origin, &out.best.tokens).unwrap();
            assert_eq!(replay, out.best.score);
            let sum: f64 = out.per_step_scores.iter().fold(0.0, |acc, s| acc + s);
            assert_eq!(sum, out.best.score);
        }
    }

    #[test]
    fn alm_aux_is_fetched_once() {
        let lm = CachedSource::new(NGramLM::train(&["a b c a", "c b a"], 2, 0.5).unwrap(), 1024)
            .with_query_log();
        let prompt = PromptTokens {
            prompt: lm.inner().vocab().tokenize("a b"),
            instruction: lm.inner().vocab().tokenize("c"),
            source: lm.inner().vocab().tokenize("b c"),
        };
        let cfg = DecodeConfig {
            max_new_tokens: 8,
            stop_token_ids: Some(vec![]),
            ..DecodeConfig::default()
        };
        let spec = ObjectiveSpec::with_default_weight(ObjectiveKind::AlmX);
        let out = greedy_decode(&lm, &spec, &prompt, &cfg).unwrap();
        assert_eq!(out.best.tokens.len(), 8);
        assert_eq!(out.queries.aux_queries, 1);
        assert_eq!(out.queries.main_queries, 8);
        assert_eq!(lm.queries_for(&prompt.source).lookups, 1);
    }

    #[test]
    fn bad_configs() {
        let lm = NGramLM::train(&["a"], 2, 1.0).unwrap();
        let p = bos_prompt(&lm);
        let zero_beam = DecodeConfig {
            beam_width: 0,
            ..DecodeConfig::default()
        };
        assert!(matches!(
            beam_decode(&lm, &ObjectiveSpec::base(), &p, &zero_beam),
            Err(DecodeError::Config(_))
        ));
        let bad_stop = DecodeConfig {
            stop_token_ids: Some(vec![99]),
            ..DecodeConfig::default()
        };
        assert!(greedy_decode(&lm, &ObjectiveSpec::base(), &p, &bad_stop).is_err());
    }
}

use crate::lm::{LogitSource, TokenId, TokenSeq};
use crate::objectives::{ObjectiveSpec, PromptTokens};

use super::{rank, DecodeConfig, DecodeError, DecodeOutput, FinishReason, Hypothesis, StepScorer};

struct Beam {
    tokens: TokenSeq,
    score: f64,
    steps: Vec<f64>,
}

struct Candidate {
    parent: usize,
    step: f64,
    score: f64,
    tokens: TokenSeq,
}

/// Beam search with a finished pool.
///
/// Every step expands each live hypothesis over the vocabulary and ranks
/// all candidates by cumulative score. Candidates ending in a stop token
/// move to the finished pool without taking a beam slot; the first `B`
/// others stay live. Search ends once the pool holds `B` hypotheses or no
/// live hypothesis remains; at `max_new_tokens` the surviving live
/// hypotheses join the pool as length-limited. The best pool entry wins.
pub fn beam_decode<S: LogitSource + ?Sized>(
    lm: &S,
    spec: &ObjectiveSpec,
    prompt: &PromptTokens,
    cfg: &DecodeConfig,
) -> Result<DecodeOutput, DecodeError> {
    cfg.validate()?;
    let width = cfg.beam_width;
    let stop_ids = cfg.stop_ids(lm)?;
    let is_stop = |id: TokenId| stop_ids.binary_search(&id).is_ok();
    let mut scorer = StepScorer::new(lm, *spec, prompt, cfg.gamma_origin);
    let mut live = vec![Beam {
        tokens: Vec::new(),
        score: 0.0,
        steps: Vec::new(),
    }];
    let mut pool: Vec<(Hypothesis, Vec<f64>)> = Vec::new();
    // A hypothesis contributes at most `width` live candidates plus its stop
    // candidates to the kept set, so the rest are dropped before the merge.
    let keep_per_parent = width + stop_ids.len();

    for t in 1..=cfg.max_new_tokens {
        if live.is_empty() || pool.len() >= width {
            break;
        }
        let prefixes: Vec<&[TokenId]> = live.iter().map(|b| b.tokens.as_slice()).collect();
        let scores = scorer.score(&prefixes, t)?;
        let mut candidates = Vec::new();
        for (parent, (beam, row)) in live.iter().zip(&scores).enumerate() {
            let mut local: Vec<Candidate> = row
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_finite())
                .map(|(id, &s)| {
                    let mut tokens = Vec::with_capacity(beam.tokens.len() + 1);
                    tokens.extend_from_slice(&beam.tokens);
                    tokens.push(id as TokenId);
                    Candidate {
                        parent,
                        step: s,
                        score: beam.score + s,
                        tokens,
                    }
                })
                .collect();
            if local.len() > keep_per_parent {
                local.select_nth_unstable_by(keep_per_parent - 1, |a, b| {
                    rank(a.score, &a.tokens, b.score, &b.tokens)
                });
                local.truncate(keep_per_parent);
            }
            candidates.extend(local);
        }
        candidates.sort_by(|a, b| rank(a.score, &a.tokens, b.score, &b.tokens));

        let last_step = t == cfg.max_new_tokens;
        let mut next = Vec::with_capacity(width);
        for c in candidates {
            if next.len() == width {
                break;
            }
            let mut steps = live[c.parent].steps.clone();
            steps.push(c.step);
            let stop = is_stop(*c.tokens.last().expect("candidates are non-empty"));
            if stop || last_step {
                let reason = if stop {
                    FinishReason::StopToken
                } else {
                    FinishReason::MaxLength
                };
                pool.push((finished(c.tokens, c.score, reason), steps));
                if !stop {
                    next.push(None);
                }
            } else {
                next.push(Some(Beam {
                    tokens: c.tokens,
                    score: c.score,
                    steps,
                }));
            }
        }
        if next.is_empty() && pool.is_empty() {
            return Err(DecodeError::NoCandidates { step: t });
        }
        live = next.into_iter().flatten().collect();
    }

    pool.sort_by(|(a, _), (b, _)| rank(a.score, &a.tokens, b.score, &b.tokens));
    let (best, per_step_scores) = pool.first().cloned().expect("pool is filled before exit");
    let text = lm.detokenize(best.content())?;
    Ok(DecodeOutput {
        best,
        all_finished: pool.into_iter().map(|(h, _)| h).collect(),
        per_step_scores,
        text,
        queries: scorer.stats(),
    })
}

fn finished(tokens: TokenSeq, score: f64, reason: FinishReason) -> Hypothesis {
    Hypothesis {
        tokens,
        score,
        finished: true,
        finish_reason: Some(reason),
    }
}

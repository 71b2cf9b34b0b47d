use crate::lm::{LogitSource, TokenId, TokenSeq};
use crate::objectives::{GammaOrigin, ObjectiveSpec, PromptTokens};

use super::{rank, DecodeError, FinishReason, Hypothesis, StepScorer};

/// Largest `vocab_size^max_len` the oracle accepts.
pub const EXHAUSTIVE_GUARD: u64 = 1_000_000;

/// Test oracle: scores every sequence of at most `max_len` tokens that
/// either ends at its first stop token or runs to `max_len`, and returns
/// the best one under the same ranking as beam search.
pub fn exhaustive_argmax<S: LogitSource + ?Sized>(
    lm: &S,
    spec: &ObjectiveSpec,
    prompt: &PromptTokens,
    max_len: usize,
    stop_ids: &[TokenId],
    origin: GammaOrigin,
) -> Result<Hypothesis, DecodeError> {
    let vocab_size = lm.vocab_size();
    let space = u32::try_from(max_len)
        .ok()
        .and_then(|n| (vocab_size as u64).checked_pow(n));
    if !matches!(space, Some(n) if n <= EXHAUSTIVE_GUARD) {
        return Err(DecodeError::GuardExceeded {
            vocab_size,
            max_len,
            limit: EXHAUSTIVE_GUARD,
        });
    }
    if max_len == 0 {
        return Err(DecodeError::Config("max_len must be at least 1".into()));
    }
    let mut search = Search {
        scorer: StepScorer::new(lm, *spec, prompt, origin),
        stop_ids,
        max_len,
        best: None,
    };
    search.visit(&mut Vec::new(), 0.0)?;
    search.best.ok_or(DecodeError::NoCandidates { step: 1 })
}

struct Search<'a, S: ?Sized> {
    scorer: StepScorer<'a, S>,
    stop_ids: &'a [TokenId],
    max_len: usize,
    best: Option<Hypothesis>,
}

impl<S: LogitSource + ?Sized> Search<'_, S> {
    fn visit(&mut self, prefix: &mut TokenSeq, score: f64) -> Result<(), DecodeError> {
        let t = prefix.len() + 1;
        let row = self.scorer.score(&[prefix.as_slice()], t)?.pop().expect("one prefix");
        for (id, s) in row.into_iter().enumerate() {
            if !s.is_finite() {
                continue;
            }
            let id = id as TokenId;
            let total = score + s;
            prefix.push(id);
            if self.stop_ids.contains(&id) {
                self.offer(prefix, total, FinishReason::StopToken);
            } else if t == self.max_len {
                self.offer(prefix, total, FinishReason::MaxLength);
            } else {
                self.visit(prefix, total)?;
            }
            prefix.pop();
        }
        Ok(())
    }

    fn offer(&mut self, tokens: &[TokenId], score: f64, reason: FinishReason) {
        let better = match &self.best {
            None => true,
            Some(b) => rank(score, tokens, b.score, &b.tokens).is_lt(),
        };
        if better {
            self.best = Some(Hypothesis {
                tokens: tokens.to_vec(),
                score,
                finished: true,
                finish_reason: Some(reason),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{NGramLM, Vocabulary};

    #[test]
    fn single_event_vocabulary_has_one_answer() {
        // Only </s> can be emitted: the answer is the bare stop token.
        let lm = NGramLM::train_sequences(Vocabulary::new(Vec::<&str>::new()), &[vec![]], 2, 1.0)
            .unwrap();
        let eos = lm.vocab().eos_id();
        let prompt = PromptTokens {
            prompt: vec![lm.vocab().bos_id()],
            instruction: vec![],
            source: vec![],
        };
        let h = exhaustive_argmax(&lm, &ObjectiveSpec::base(), &prompt, 3, &[eos], GammaOrigin::OneBased)
            .unwrap();
        assert_eq!(h.tokens, vec![eos]);
        assert_eq!(h.score, 0.0);
    }

    #[test]
    fn guard_refuses_large_spaces() {
        let words: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let lm = NGramLM::train(&[words.join(" ")], 2, 1.0).unwrap();
        let prompt = PromptTokens {
            prompt: vec![3],
            instruction: vec![3],
            source: vec![3],
        };
        let err = exhaustive_argmax(&lm, &ObjectiveSpec::base(), &prompt, 5, &[1], GammaOrigin::OneBased);
        assert!(matches!(err, Err(DecodeError::GuardExceeded { .. })));
    }
}

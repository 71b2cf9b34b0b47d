//! Fixed-order add-k n-gram model.
//!
//! For a history `h` of the last `order - 1` tokens (left-padded with `<s>`):
//!
//! ```text
//! p(w | h) = (count(h, w) + k) / (count(h) + k * |E|)
//! ```
//!
//! where `E` is the event alphabet: every vocabulary entry except `<s>` and
//! `<unk>`, which are context-only and receive probability zero. There is no
//! backoff, so an unseen history yields the uniform distribution over `E`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    check_context, LmError, LogProbVector, LogitSource, SpecialTokens, TokenId, TokenSeq,
    Vocabulary,
};

const FORMAT_TAG: &str = "antilm-toy-ngram";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
struct HistoryCounts {
    total: u64,
    next: BTreeMap<TokenId, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramLM {
    order: usize,
    k: f64,
    vocab: Vocabulary,
    counts: BTreeMap<TokenSeq, HistoryCounts>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u32,
    order: usize,
    k: f64,
    vocab: Vec<String>,
    counts: Vec<HistoryDoc>,
}

#[derive(Serialize, Deserialize)]
struct HistoryDoc {
    context: TokenSeq,
    next: Vec<(TokenId, u64)>,
}

impl NGramLM {
    /// Trains on whitespace-tokenized sentences. The vocabulary is every
    /// distinct word of the corpus in first-seen order.
    pub fn train<S: AsRef<str>>(corpus: &[S], order: usize, k: f64) -> Result<Self, LmError> {
        let vocab = Vocabulary::new(corpus.iter().flat_map(|s| s.as_ref().split_whitespace()));
        let seqs: Vec<TokenSeq> = corpus.iter().map(|s| vocab.tokenize(s.as_ref())).collect();
        Self::train_sequences(vocab, &seqs, order, k)
    }

    /// Trains on pre-tokenized sequences over an explicit vocabulary.
    pub fn train_sequences(
        vocab: Vocabulary,
        corpus: &[TokenSeq],
        order: usize,
        k: f64,
    ) -> Result<Self, LmError> {
        validate_params(order, k)?;
        if corpus.is_empty() {
            return Err(LmError::Config("training corpus is empty".into()));
        }
        let mut counts: BTreeMap<TokenSeq, HistoryCounts> = BTreeMap::new();
        for seq in corpus {
            check_context(seq, vocab.len())?;
            if let Some(&bad) = seq
                .iter()
                .find(|&&id| vocab.is_context_only(id) || id == vocab.eos_id())
            {
                return Err(LmError::Config(format!(
                    "training sequence contains reserved token {:?}",
                    vocab.token(bad).unwrap_or_default()
                )));
            }
            let mut padded: TokenSeq = vec![vocab.bos_id(); order - 1];
            padded.extend_from_slice(seq);
            padded.push(vocab.eos_id());
            for window in padded.windows(order) {
                let (history, event) = window.split_at(order - 1);
                let entry = counts.entry(history.to_vec()).or_default();
                entry.total += 1;
                *entry.next.entry(event[0]).or_default() += 1;
            }
        }
        Ok(Self {
            order,
            k,
            vocab,
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Size of the event alphabet (the `|V|` of the add-k denominator).
    pub fn event_count(&self) -> usize {
        self.vocab.len() - 2
    }

    /// `count(h, w)` for a history of exactly `order - 1` ids.
    pub fn count(&self, history: &[TokenId], next: TokenId) -> u64 {
        self.counts
            .get(history)
            .and_then(|h| h.next.get(&next))
            .copied()
            .unwrap_or(0)
    }

    /// `count(h)` for a history of exactly `order - 1` ids.
    pub fn history_count(&self, history: &[TokenId]) -> u64 {
        self.counts.get(history).map_or(0, |h| h.total)
    }

    /// The `order - 1` ids that condition the next token after `context`.
    pub fn history_of(&self, context: &[TokenId]) -> TokenSeq {
        let width = self.order - 1;
        let mut history = vec![self.vocab.bos_id(); width.saturating_sub(context.len())];
        history.extend_from_slice(&context[context.len().saturating_sub(width)..]);
        history
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            order: self.order,
            k: self.k,
            vocab: self.vocab.entries().to_vec(),
            counts: self
                .counts
                .iter()
                .map(|(context, h)| HistoryDoc {
                    context: context.clone(),
                    next: h.next.iter().map(|(&id, &c)| (id, c)).collect(),
                })
                .collect(),
        };
        let mut out = serde_json::to_string(&doc).expect("model document serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, LmError> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        if doc.format != FORMAT_TAG || doc.version != FORMAT_VERSION {
            return Err(LmError::Config(format!(
                "unsupported model format {} v{}",
                doc.format, doc.version
            )));
        }
        validate_params(doc.order, doc.k)?;
        let vocab = Vocabulary::from_entries(doc.vocab)?;
        let mut counts = BTreeMap::new();
        for h in doc.counts {
            if h.context.len() != doc.order - 1 {
                return Err(LmError::Config(format!(
                    "history {:?} has length {}, expected {}",
                    h.context,
                    h.context.len(),
                    doc.order - 1
                )));
            }
            check_context(&h.context, vocab.len())?;
            let mut entry = HistoryCounts::default();
            for (id, c) in h.next {
                check_context(&[id], vocab.len())?;
                if vocab.is_context_only(id) {
                    return Err(LmError::Config(format!("context-only id {id} counted as event")));
                }
                entry.total += c;
                *entry.next.entry(id).or_default() += c;
            }
            counts.insert(h.context, entry);
        }
        Ok(Self {
            order: doc.order,
            k: doc.k,
            vocab,
            counts,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LmError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LmError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn validate_params(order: usize, k: f64) -> Result<(), LmError> {
    if order == 0 {
        return Err(LmError::Config("n-gram order must be at least 1".into()));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(LmError::Config(format!("smoothing constant k must be > 0, got {k}")));
    }
    Ok(())
}

impl LogitSource for NGramLM {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn special_tokens(&self) -> SpecialTokens {
        SpecialTokens {
            bos: Some(self.vocab.bos_id()),
            eos: self.vocab.eos_id(),
            newline: None,
        }
    }

    fn next_logprobs(&self, context: &[TokenId]) -> Result<LogProbVector, LmError> {
        check_context(context, self.vocab.len())?;
        let history = self.history_of(context);
        let counts = self.counts.get(&history);
        let total = counts.map_or(0, |h| h.total) as f64;
        let denom = total + self.k * self.event_count() as f64;
        let values = (0..self.vocab.len() as TokenId)
            .map(|id| {
                if self.vocab.is_context_only(id) {
                    return f64::NEG_INFINITY;
                }
                let c = counts.and_then(|h| h.next.get(&id)).copied().unwrap_or(0) as f64;
                ((c + self.k) / denom).ln()
            })
            .collect();
        Ok(LogProbVector::from_normalized(values))
    }

    fn tokenize(&self, text: &str) -> Result<TokenSeq, LmError> {
        Ok(self.vocab.tokenize(text))
    }

    fn detokenize(&self, ids: &[TokenId]) -> Result<String, LmError> {
        check_context(ids, self.vocab.len())?;
        Ok(self.vocab.detokenize(ids))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(lm: &NGramLM, tok: &str) -> TokenId {
        lm.vocab().id(tok).unwrap()
    }

    #[test]
    fn add_one_bigram_matches_hand_evaluation() {
        let lm = NGramLM::train(&["a b", "b a"], 2, 1.0).unwrap();
        assert_eq!(lm.event_count(), 3);
        let v = lm.next_logprobs(&[]).unwrap();
        // count(<s>, a) = 1, count(<s>) = 2, |E| = 3
        let p_a = v.get(id(&lm, "a")).unwrap();
        assert!((p_a - 0.4f64.ln()).abs() < 1e-12);
        assert!((p_a - (-0.9163)).abs() < 1e-4);
    }

    #[test]
    fn counts_include_padding_and_terminal_event() {
        let lm = NGramLM::train(&["a b"], 2, 1.0).unwrap();
        let (bos, eos) = (lm.vocab().bos_id(), lm.vocab().eos_id());
        let (a, b) = (id(&lm, "a"), id(&lm, "b"));
        assert_eq!(lm.count(&[bos], a), 1);
        assert_eq!(lm.count(&[a], b), 1);
        assert_eq!(lm.count(&[b], eos), 1);
        assert_eq!(lm.history_count(&[b]), 1);

        let lm = NGramLM::train(&["a b", "b a"], 2, 1.0).unwrap();
        assert_eq!(lm.count(&[a], b), 1);
        assert_eq!(lm.count(&[b], a), 1);
    }

    #[test]
    fn unseen_history_is_uniform_over_events() {
        let lm = NGramLM::train(&["a b", "b a"], 3, 0.5).unwrap();
        let b = id(&lm, "b");
        let v = lm.next_logprobs(&[b, b]).unwrap();
        let uniform = (1.0 / lm.event_count() as f64).ln();
        for tok in 0..lm.vocab_size() as TokenId {
            if lm.vocab().is_context_only(tok) {
                assert_eq!(v.get(tok), Some(f64::NEG_INFINITY));
            } else {
                assert!((v.get(tok).unwrap() - uniform).abs() < 1e-15);
            }
        }
        assert!(v.logsumexp().abs() < 1e-12);
    }

    #[test]
    fn history_is_left_padded() {
        let lm = NGramLM::train(&["a b"], 3, 1.0).unwrap();
        let bos = lm.vocab().bos_id();
        let a = id(&lm, "a");
        assert_eq!(lm.history_of(&[]), vec![bos, bos]);
        assert_eq!(lm.history_of(&[a]), vec![bos, a]);
        assert_eq!(lm.history_of(&[a, a, a]), vec![a, a]);
        let unigram = NGramLM::train(&["a b"], 1, 1.0).unwrap();
        assert!(unigram.history_of(&[a]).is_empty());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(NGramLM::train::<&str>(&[], 2, 1.0), Err(LmError::Config(_))));
        assert!(NGramLM::train(&["a"], 0, 1.0).is_err());
        assert!(NGramLM::train(&["a"], 2, 0.0).is_err());
        assert!(NGramLM::train(&["a"], 2, f64::NAN).is_err());
    }

    #[test]
    fn invalid_context_is_rejected() {
        let lm = NGramLM::train(&["a b"], 2, 1.0).unwrap();
        let err = lm.next_logprobs(&[99]).unwrap_err();
        assert!(matches!(err, LmError::InvalidToken { id: 99, .. }));
        assert!(!err.is_transport());
    }

    #[test]
    fn serialization_is_byte_stable() {
        let corpus = ["a b c", "c b a", "a a"];
        let one = NGramLM::train(&corpus, 3, 0.25).unwrap();
        let two = NGramLM::train(&corpus, 3, 0.25).unwrap();
        assert_eq!(one.to_json(), two.to_json());
        let back = NGramLM::from_json(&one.to_json()).unwrap();
        assert_eq!(back, one);
        assert_eq!(back.to_json(), one.to_json());
    }

    #[test]
    fn from_json_rejects_wrong_history_width() {
        let lm = NGramLM::train(&["a b"], 2, 1.0).unwrap();
        let doc = lm.to_json().replace("\"order\":2", "\"order\":3");
        assert!(NGramLM::from_json(&doc).is_err());
    }
}

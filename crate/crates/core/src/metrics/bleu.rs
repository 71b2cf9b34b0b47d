//! Cased corpus BLEU with 13a tokenization and exponential smoothing.
//!
//! Reproduces SacreBLEU's default configuration number for number,
//! including its corner cases (a corpus with no 4-grams scores 0).

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::MetricsError;

const MAX_ORDER: usize = 4;

static TOKENIZE_RULES: LazyLock<[(Regex, &'static str); 4]> = LazyLock::new(|| {
    let re = |p: &str| Regex::new(p).expect("static pattern");
    [
        (re(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), " ${1} "),
        (re(r"([^0-9])([\.,])"), "${1} ${2} "),
        (re(r"([\.,])([^0-9])"), " ${1} ${2}"),
        (re(r"([0-9])(-)"), "${1} ${2} "),
    ]
});

/// Whitespace as understood by Python's `str.split()`.
fn is_split_char(c: char) -> bool {
    c.is_whitespace() || ('\x1c'..='\x1f').contains(&c)
}

pub fn tokenize_13a(text: &str) -> Vec<String> {
    let mut line = text.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let mut line = format!(" {line} ");
    for (re, rep) in TOKENIZE_RULES.iter() {
        line = re.replace_all(&line, *rep).into_owned();
    }
    line.split(is_split_char)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuResult {
    pub score: f64,
    /// Clipped n-gram precisions in percent, smoothed where zero.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

/// Sufficient statistics of one or more segments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub hyp_len: usize,
    pub ref_len: usize,
    pub correct: [usize; MAX_ORDER],
    pub total: [usize; MAX_ORDER],
}

impl BleuStats {
    pub fn segment(hyp: &str, reference: &str) -> Self {
        let hyp = tokenize_13a(hyp.trim_end_matches(is_split_char));
        let reference = tokenize_13a(reference.trim_end_matches(is_split_char));
        let ref_counts = ngram_counts(&reference);
        let mut stats = BleuStats {
            hyp_len: hyp.len(),
            ref_len: reference.len(),
            ..Default::default()
        };
        for (gram, count) in ngram_counts(&hyp) {
            let n = gram.len();
            stats.total[n - 1] += count;
            stats.correct[n - 1] += count.min(ref_counts.get(&gram).copied().unwrap_or(0));
        }
        stats
    }

    pub fn add(&mut self, other: &BleuStats) {
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        for n in 0..MAX_ORDER {
            self.correct[n] += other.correct[n];
            self.total[n] += other.total[n];
        }
    }

    pub fn score(&self) -> BleuResult {
        let bp = if self.hyp_len < self.ref_len {
            if self.hyp_len > 0 {
                (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
            } else {
                0.0
            }
        } else {
            1.0
        };
        let mut precisions = [0.0; MAX_ORDER];
        if self.correct.iter().all(|&c| c == 0) {
            return BleuResult {
                score: 0.0,
                precisions,
                brevity_penalty: bp,
                hyp_len: self.hyp_len,
                ref_len: self.ref_len,
            };
        }
        let mut smooth = 1.0;
        for ((p, &correct), &total) in precisions.iter_mut().zip(&self.correct).zip(&self.total) {
            if total == 0 {
                break;
            }
            *p = if correct == 0 {
                smooth *= 2.0;
                100.0 / (smooth * total as f64)
            } else {
                100.0 * correct as f64 / total as f64
            };
        }
        let log_sum = precisions.iter().fold(0.0, |acc, &p| {
            acc + if p == 0.0 { -9_999_999_999.0 } else { p.ln() }
        });
        BleuResult {
            score: bp * (log_sum / MAX_ORDER as f64).exp(),
            precisions,
            brevity_penalty: bp,
            hyp_len: self.hyp_len,
            ref_len: self.ref_len,
        }
    }
}

fn ngram_counts(tokens: &[String]) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for n in 1..=MAX_ORDER {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(
    hyps: &[H],
    refs: &[R],
) -> Result<BleuResult, MetricsError> {
    if hyps.len() != refs.len() {
        return Err(MetricsError::LengthMismatch {
            left: hyps.len(),
            right: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(MetricsError::Empty("corpus_bleu needs at least one segment"));
    }
    let mut stats = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        stats.add(&BleuStats::segment(h.as_ref(), r.as_ref()));
    }
    Ok(stats.score())
}

/// Corpus BLEU of a single pair.
pub fn sentence_bleu(hyp: &str, reference: &str) -> BleuResult {
    BleuStats::segment(hyp, reference).score()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize_13a("Hello, world!"), ["Hello", ",", "world", "!"]);
        assert_eq!(tokenize_13a("3.5"), ["3.5"]);
        assert!(tokenize_13a("").is_empty());
        assert_eq!(tokenize_13a("a&amp;b"), ["a", "&", "b"]);
        assert_eq!(tokenize_13a("x-\ny"), ["xy"]);
        assert_eq!(tokenize_13a("10-20 1,000 end."), ["10", "-", "20", "1,000", "end", "."]);
    }

    #[test]
    fn identity_and_empty() {
        let s = ["the cat sat on the mat .", "a quick brown fox jumps"];
        assert!((corpus_bleu(&s, &s).unwrap().score - 100.0).abs() < 1e-9);
        assert_eq!(corpus_bleu(&["", ""], &s).unwrap().score, 0.0);
    }

    #[test]
    fn short_corpus_without_four_grams_scores_zero() {
        let r = corpus_bleu(&["a b c"], &["a b c"]).unwrap();
        assert_eq!(r.score, 0.0);
        assert_eq!(r.precisions[..3], [100.0, 100.0, 100.0]);
    }

    #[test]
    fn length_mismatch() {
        assert!(corpus_bleu(&["a"], &["a", "b"]).is_err());
    }
}

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Character-trigram naive Bayes language classifier with add-one smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangIdModel {
    languages: BTreeMap<String, LanguageTable>,
    vocab_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LanguageTable {
    log_prior: f64,
    counts: HashMap<String, u64>,
    total: u64,
}

/// Lowercased, whitespace-collapsed and padded with one space on each side.
fn normalize(text: &str) -> Vec<char> {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let mut chars = vec![' '];
    chars.extend(collapsed.chars());
    chars.push(' ');
    chars
}

fn trigrams(text: &str) -> impl Iterator<Item = String> {
    let chars = normalize(text);
    (0..chars.len().saturating_sub(2))
        .map(move |i| chars[i..i + 3].iter().collect())
}

impl LangIdModel {
    pub fn train<S: AsRef<str>>(corpora: &BTreeMap<String, Vec<S>>) -> Result<Self, MetricsError> {
        if corpora.len() < 2 {
            return Err(MetricsError::Config(format!(
                "language identification needs at least two languages, got {}",
                corpora.len()
            )));
        }
        if let Some((lang, _)) = corpora.iter().find(|(_, s)| s.is_empty()) {
            return Err(MetricsError::Config(format!("no training sentences for {lang:?}")));
        }
        let n_sentences: usize = corpora.values().map(Vec::len).sum();
        let mut vocab = HashSet::new();
        let mut languages = BTreeMap::new();
        for (lang, sentences) in corpora {
            let mut counts: HashMap<String, u64> = HashMap::new();
            let mut total = 0;
            for s in sentences {
                for tri in trigrams(s.as_ref()) {
                    vocab.insert(tri.clone());
                    *counts.entry(tri).or_default() += 1;
                    total += 1;
                }
            }
            let log_prior = (sentences.len() as f64 / n_sentences as f64).ln();
            languages.insert(
                lang.clone(),
                LanguageTable {
                    log_prior,
                    counts,
                    total,
                },
            );
        }
        Ok(Self {
            languages,
            vocab_size: vocab.len(),
        })
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.languages.keys().map(String::as_str)
    }

    /// Log-posterior (up to a shared constant) of every language, by code.
    pub fn scores(&self, text: &str) -> BTreeMap<&str, f64> {
        let grams: Vec<String> = trigrams(text).collect();
        self.languages
            .iter()
            .map(|(lang, table)| {
                let denom = (table.total + self.vocab_size as u64) as f64;
                let ll = grams.iter().fold(table.log_prior, |acc, g| {
                    let c = table.counts.get(g).copied().unwrap_or(0);
                    acc + ((c + 1) as f64 / denom).ln()
                });
                (lang.as_str(), ll)
            })
            .collect()
    }

    /// Most probable language; ties go to the alphabetically first code.
    pub fn classify(&self, text: &str) -> &str {
        let mut best: Option<(&str, f64)> = None;
        for (lang, score) in self.scores(text) {
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((lang, score));
            }
        }
        best.expect("model has at least two languages").0
    }
}

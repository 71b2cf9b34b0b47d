#![allow(dead_code)]

pub mod bilingual;

use std::path::PathBuf;

use antilm::decoder::DecodeConfig;
use antilm::lm::{NGramLM, TokenId, TokenSeq};
use antilm::objectives::PromptTokens;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixture_dir().join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A toy model plus a prompt shaped like a real one: the instruction, then
/// the source, then a cue token.
#[derive(Debug, Clone)]
pub struct ToyInstance {
    pub corpus: Vec<String>,
    pub order: usize,
    pub k: f64,
    pub lm: NGramLM,
    pub prompt: PromptTokens,
    pub max_new_tokens: usize,
}

impl ToyInstance {
    pub fn build(corpus: Vec<String>, order: usize, k: f64, instruction: &str, source: &str, max_new_tokens: usize) -> Self {
        let lm = NGramLM::train(&corpus, order, k).expect("toy model trains");
        let prompt = toy_prompt(&lm, instruction, source);
        Self {
            corpus,
            order,
            k,
            lm,
            prompt,
            max_new_tokens,
        }
    }

    pub fn decode_config(&self, beam_width: usize) -> DecodeConfig {
        DecodeConfig {
            beam_width,
            max_new_tokens: self.max_new_tokens,
            ..DecodeConfig::default()
        }
    }

    pub fn stop_ids(&self) -> Vec<TokenId> {
        vec![self.lm.vocab().eos_id()]
    }
}

/// `<instruction> <source> <last word of the vocabulary>` as the prompt.
pub fn toy_prompt(lm: &NGramLM, instruction: &str, source: &str) -> PromptTokens {
    let v = lm.vocab();
    let instruction: TokenSeq = v.tokenize(instruction);
    let source: TokenSeq = v.tokenize(source);
    let cue = (v.len() - 1) as TokenId;
    let mut prompt = instruction.clone();
    prompt.extend_from_slice(&source);
    prompt.push(cue);
    PromptTokens {
        prompt,
        instruction,
        source,
    }
}

fn random_sentence(rng: &mut ChaCha8Rng, words: &[String], min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    (0..len)
        .map(|_| words[rng.random_range(0..words.len())].as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// A random instance with `n_words` surface words (so `n_words + 1`
/// emittable tokens, counting end-of-sequence).
pub fn random_instance(rng: &mut ChaCha8Rng, n_words: usize, max_new_tokens: usize) -> ToyInstance {
    let words: Vec<String> = (0..n_words).map(|i| format!("w{i}")).collect();
    let order = rng.random_range(2..=3);
    let k = [0.05, 0.1, 0.3, 0.5, 1.0][rng.random_range(0..5)];
    let n_sentences = rng.random_range(2..=6);
    let mut corpus: Vec<String> = (0..n_sentences)
        .map(|_| random_sentence(rng, &words, 1, 5))
        .collect();
    // Every word must occur so the vocabulary has exactly `n_words` entries.
    corpus.push(words.join(" "));
    let instruction = random_sentence(rng, &words, 1, 3);
    let source = random_sentence(rng, &words, 1, 3);
    ToyInstance::build(corpus, order, k, &instruction, &source, max_new_tokens)
}

/// Up to 3 words (at most 4 emittable tokens) and up to 4 new tokens.
pub fn small_instance(rng: &mut ChaCha8Rng) -> ToyInstance {
    let n_words = rng.random_range(1..=3);
    let max_new_tokens = rng.random_range(1..=4);
    random_instance(rng, n_words, max_new_tokens)
}

/// A wider instance for properties that do not need enumeration.
pub fn medium_instance(rng: &mut ChaCha8Rng) -> ToyInstance {
    let n_words = rng.random_range(2..=8);
    let max_new_tokens = rng.random_range(1..=10);
    random_instance(rng, n_words, max_new_tokens)
}

/// Number of token sequences the decoders can reach: every sequence of at
/// most `max_len` emittable tokens.
pub fn reachable_sequences(emittable: usize, max_len: usize) -> usize {
    (1..=max_len).map(|l| emittable.pow(l as u32)).sum()
}

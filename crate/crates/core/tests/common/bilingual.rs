//! Two toy languages with disjoint alphabets and a prompt-biased toy model.
//!
//! `qa` words use the letters p, t, k, a, o and `qb` words use m, n, l, e, u.
//! Every `qa` word has exactly one `qb` translation and word order is kept, so
//! a reference is a word-for-word mapping of its source. The model sees
//! monolingual text in both languages plus translation prompts whose
//! continuation after the target cue is usually a copy of the source.

use std::collections::BTreeSet;
use std::path::Path;

use antilm::corpus::{render_prompt, save_jsonl, SentenceRecord, TemplateId};
use antilm::lm::NGramLM;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use super::rng;

pub const INSTRUCTION: &str = "Translate Qa to Qb:";
pub const SOURCE_CUE: &str = "Qa";
pub const TARGET_CUE: &str = "Qb";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub seed: u64,
    pub words: usize,
    pub successors: usize,
    pub test_sentences: usize,
    pub mono_sentences: usize,
    pub prompt_docs: usize,
    pub copy_prob: f64,
    pub order: usize,
    pub k: f64,
    pub max_new_tokens: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            seed: 0,
            words: 12,
            successors: 24,
            test_sentences: 50,
            mono_sentences: 300,
            prompt_docs: 300,
            copy_prob: 0.55,
            order: 3,
            k: 0.001,
            max_new_tokens: 12,
        }
    }
}

pub struct Bench {
    pub params: BenchParams,
    pub records: Vec<SentenceRecord>,
    pub train: Vec<String>,
    pub lm: NGramLM,
}

pub fn template() -> TemplateId {
    TemplateId::Custom {
        instruction: INSTRUCTION.into(),
        source_cue: SOURCE_CUE.into(),
        target_cue: TARGET_CUE.into(),
    }
}

fn lexicon(rng: &mut ChaCha8Rng, consonants: &[char], vowels: &[char], n: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let syllables = rng.random_range(1..=3);
        let w: String = (0..syllables)
            .flat_map(|_| {
                [
                    consonants[rng.random_range(0..consonants.len())],
                    vowels[rng.random_range(0..vowels.len())],
                ]
            })
            .collect();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

/// A random first-order chain over word indices.
struct Chain {
    next: Vec<Vec<usize>>,
}

impl Chain {
    fn random(rng: &mut ChaCha8Rng, n: usize, successors: usize) -> Self {
        let next = (0..n)
            .map(|_| (0..successors).map(|_| rng.random_range(0..n)).collect())
            .collect();
        Self { next }
    }

    fn sentence(&self, rng: &mut ChaCha8Rng, min: usize, max: usize) -> Vec<usize> {
        let len = rng.random_range(min..=max);
        let mut s = vec![rng.random_range(0..self.next.len())];
        while s.len() < len {
            let succ = &self.next[*s.last().unwrap()];
            s.push(succ[rng.random_range(0..succ.len())]);
        }
        s
    }
}

fn render(words: &[String], idx: &[usize]) -> String {
    idx.iter().map(|&i| words[i].as_str()).collect::<Vec<_>>().join(" ")
}

fn record(id: usize, source: String, reference: String) -> SentenceRecord {
    SentenceRecord {
        id: format!("qa-qb-{id:03}"),
        source,
        reference,
        source_lang: "qa".into(),
        target_lang: "qb".into(),
        entities: vec![],
    }
}

pub fn generate(params: &BenchParams) -> Bench {
    let mut rng = rng(params.seed);
    let qa = lexicon(&mut rng, &['p', 't', 'k'], &['a', 'o'], params.words);
    let qb = lexicon(&mut rng, &['m', 'n', 'l'], &['e', 'u'], params.words);
    let chain = Chain::random(&mut rng, params.words, params.successors);

    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(params.test_sentences);
    while records.len() < params.test_sentences {
        let s = chain.sentence(&mut rng, 2, 4);
        if seen.insert(s.clone()) {
            records.push(record(records.len(), render(&qa, &s), render(&qb, &s)));
        }
    }

    let mut train = Vec::new();
    for _ in 0..params.mono_sentences {
        train.push(render(&qa, &chain.sentence(&mut rng, 3, 10)));
        train.push(render(&qb, &chain.sentence(&mut rng, 3, 10)));
    }
    let template = template();
    for i in 0..params.prompt_docs {
        let s = chain.sentence(&mut rng, 2, 4);
        let rec = record(i, render(&qa, &s), render(&qb, &s));
        let prompt = render_prompt(&template, &rec, "qa").expect("custom template renders");
        let continuation = if rng.random_bool(params.copy_prob) {
            &rec.source
        } else {
            &rec.reference
        };
        train.push(format!("{} {continuation}", prompt.rendered));
    }

    let lm = NGramLM::train(&train, params.order, params.k).expect("benchmark model trains");
    Bench {
        params: params.clone(),
        records,
        train,
        lm,
    }
}

impl Bench {
    pub fn experiment_json(&self) -> String {
        let cfg = serde_json::json!({
            "corpus": "corpus.jsonl",
            "source": {"toy": {"model": "model.json"}},
            "objectives": ["base", "pmi-u", "pmi-x", "alm-u", "alm-x"],
            "decode": {
                "beam_width": 5,
                "max_new_tokens": self.params.max_new_tokens,
                "strategies": ["greedy", "beam"]
            },
            "template": template(),
            "sweep": {"objective": "alm-x"},
            "parallelism": 1,
            "output": "out"
        });
        let mut s = serde_json::to_string_pretty(&cfg).unwrap();
        s.push('\n');
        s
    }

    /// Writes `corpus.jsonl`, `train.txt`, `model.json` and `experiment.json`.
    pub fn write(&self, dir: &Path) {
        std::fs::create_dir_all(dir).unwrap();
        save_jsonl(dir.join("corpus.jsonl"), &self.records).unwrap();
        let mut train = self.train.join("\n");
        train.push('\n');
        std::fs::write(dir.join("train.txt"), train).unwrap();
        self.lm.save(dir.join("model.json")).unwrap();
        std::fs::write(dir.join("experiment.json"), self.experiment_json()).unwrap();
    }
}

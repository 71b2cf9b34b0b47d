mod common;

use std::collections::BTreeMap;

use antilm::corpus::{load_jsonl, SentenceRecord};
use antilm::metrics::{
    corpus_bleu, failure_label, mer_counts, reg, sentence_bleu, tokenize_13a, BleuStats,
    FailureCounts, FailureLabel, LangIdModel,
};
use antilm::runner::train_langid;
use proptest::prelude::*;
use serde::Deserialize;

use common::fixture;

#[derive(Deserialize)]
struct Golden {
    name: String,
    hyps: Vec<String>,
    refs: Vec<String>,
    score: f64,
    precisions: [f64; 4],
    brevity_penalty: f64,
    hyp_len: usize,
    ref_len: usize,
}

#[derive(Deserialize)]
struct TokenizeGolden {
    text: String,
    tokens: Vec<String>,
}

#[derive(Deserialize)]
struct Goldens {
    corpora: Vec<Golden>,
    tokenize: Vec<TokenizeGolden>,
}

fn goldens() -> Goldens {
    serde_json::from_str(&std::fs::read_to_string(fixture("bleu/goldens.json")).unwrap()).unwrap()
}

#[test]
fn bleu_statistics_match_the_reference_implementation() {
    for g in goldens().corpora {
        let got = corpus_bleu(&g.hyps, &g.refs).unwrap();
        assert!((got.score - g.score).abs() < 1e-9, "{}: {} vs {}", g.name, got.score, g.score);
        assert_eq!((got.hyp_len, got.ref_len), (g.hyp_len, g.ref_len), "{}", g.name);
        assert!((got.brevity_penalty - g.brevity_penalty).abs() < 1e-12, "{}", g.name);
        for (p, q) in got.precisions.iter().zip(g.precisions) {
            assert!((p - q).abs() < 1e-9, "{}: precisions {:?} vs {:?}", g.name, got.precisions, g.precisions);
        }
    }
}

#[test]
fn tokenizer_matches_the_reference_implementation() {
    for g in goldens().tokenize {
        assert_eq!(tokenize_13a(&g.text), g.tokens, "{:?}", g.text);
    }
}

#[test]
fn bleu_rejects_misaligned_corpora() {
    assert!(corpus_bleu(&["a"], &["a", "b"]).is_err());
    assert!(corpus_bleu::<&str, &str>(&[], &[]).is_err());
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!["the", "cat", "sat", "on", "mat", "a", ",", ".", "dog", "3.5"]),
        0..12,
    )
    .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn bleu_is_bounded(pairs in prop::collection::vec((sentence(), sentence()), 1..6)) {
        let (h, r): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let s = corpus_bleu(&h, &r).unwrap().score;
        prop_assert!((0.0..=100.0 + 1e-9).contains(&s), "{}", s);
    }

    #[test]
    fn corpus_statistics_are_sums_of_segments(pairs in prop::collection::vec((sentence(), sentence()), 1..6)) {
        let (h, r): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let mut stats = BleuStats::default();
        for (h, r) in h.iter().zip(&r) {
            stats.add(&BleuStats::segment(h, r));
        }
        prop_assert_eq!(stats.score(), corpus_bleu(&h, &r).unwrap());
    }

    #[test]
    fn identical_long_segments_score_full_marks(s in sentence()) {
        let b = sentence_bleu(&s, &s);
        if tokenize_13a(&s).len() >= 4 {
            prop_assert!((b.score - 100.0).abs() < 1e-9);
        } else {
            prop_assert_eq!(b.score, 0.0);
        }
    }

    #[test]
    fn reg_counts_blank_generations(texts in prop::collection::vec(prop::sample::select(vec!["", " ", "x", "a b", "\t"]), 1..20)) {
        let blanks = texts.iter().filter(|t| t.trim().is_empty()).count();
        prop_assert_eq!(reg(&texts).unwrap(), 100.0 * blanks as f64 / texts.len() as f64);
    }
}

#[test]
fn sentence_bleu_is_the_corpus_formula_on_one_pair() {
    let (h, r) = ("the cat sat on the mat today", "the cat sat on a mat today");
    assert_eq!(sentence_bleu(h, r), corpus_bleu(&[h], &[r]).unwrap());
}

fn enfr() -> Vec<SentenceRecord> {
    load_jsonl(fixture("enfr/corpus.jsonl")).unwrap()
}

#[test]
fn langid_separates_english_from_french() {
    let records = enfr();
    let model = train_langid(&records).unwrap();
    let mut correct = 0;
    for r in &records {
        correct += usize::from(model.classify(&r.source) == "en");
        correct += usize::from(model.classify(&r.reference) == "fr");
    }
    assert!(correct >= 95, "{correct}/100");
}

#[test]
fn langid_generalizes_to_held_out_sentences() {
    let records = enfr();
    let mut correct = 0;
    for i in 0..records.len() {
        let rest: Vec<SentenceRecord> =
            records.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, r)| r.clone()).collect();
        let model = train_langid(&rest).unwrap();
        correct += usize::from(model.classify(&records[i].source) == "en");
        correct += usize::from(model.classify(&records[i].reference) == "fr");
    }
    assert!(correct >= 90, "{correct}/100");
}

#[test]
fn langid_ties_go_to_the_first_language() {
    let mut corpora = BTreeMap::new();
    corpora.insert("xb".to_string(), vec!["abc"]);
    corpora.insert("xa".to_string(), vec!["abc"]);
    let model = LangIdModel::train(&corpora).unwrap();
    assert_eq!(model.classify("abc"), "xa");
    assert_eq!(model.languages().collect::<Vec<_>>(), ["xa", "xb"]);
}

#[test]
fn failure_labels_on_real_sentences() {
    let records = enfr();
    let model = train_langid(&records).unwrap();
    let r = &records[0];
    assert_eq!(failure_label(r, "", &model), FailureLabel::Empty);
    assert_eq!(failure_label(r, "  \n", &model), FailureLabel::Empty);
    assert_eq!(failure_label(r, &r.source, &model), FailureLabel::SourceLanguage);
    assert_eq!(failure_label(r, &r.reference, &model), FailureLabel::Ok);
    let counts = FailureCounts::tally([FailureLabel::Ok, FailureLabel::Empty, FailureLabel::SourceLanguage, FailureLabel::Ok]);
    assert_eq!((counts.ok, counts.empty, counts.source_language, counts.failures(), counts.total()), (2, 1, 1, 2, 4));
}

#[test]
fn entities_in_the_fixture_appear_in_their_references() {
    let records = enfr();
    let refs: Vec<&str> = records.iter().map(|r| r.reference.as_str()).collect();
    let counts = mer_counts(&records, &refs).unwrap();
    assert_eq!(counts.missing, 0);
    assert_eq!(counts.total, records.iter().map(|r| r.entities.len()).sum::<usize>());
    let blank = vec![""; records.len()];
    let counts = mer_counts(&records, &blank).unwrap();
    assert_eq!(counts.missing, counts.total);
    assert_eq!(counts.rate(), Some(100.0));
}

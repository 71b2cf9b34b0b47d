//! Evaluation corpora and prompt rendering.
//!
//! Corpora are JSONL, one [`SentenceRecord`] per line:
//!
//! ```json
//! {"id": "s1", "source": "...", "reference": "...", "source_lang": "en", "target_lang": "fr", "entities": ["Ehud Ur"]}
//! ```
//!
//! `entities` may be omitted. Unknown keys are ignored.

mod prompt;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use prompt::{
    default_instruction_lang, language_name, render_prompt, PromptParts, TemplateId,
    SUPPORTED_LANGUAGES,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate record id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub source: String,
    pub reference: String,
    pub source_lang: String,
    pub target_lang: String,
    #[serde(default)]
    pub entities: Vec<String>,
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<SentenceRecord>, CorpusError> {
    parse_jsonl(BufReader::new(File::open(path)?))
}

/// Strict parse: the first bad line aborts the whole load. Blank lines are skipped.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<Vec<SentenceRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SentenceRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        for (field, value) in [("source", &record.source), ("reference", &record.reference)] {
            if value.trim().is_empty() {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: format!("field {field:?} is empty"),
                });
            }
        }
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[SentenceRecord]) -> Result<(), CorpusError> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| CorpusError::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_jsonl(path: impl AsRef<Path>, records: &[SentenceRecord]) -> Result<(), CorpusError> {
    let mut file = std::io::BufWriter::new(File::create(path)?);
    write_jsonl(&mut file, records)?;
    file.flush()?;
    Ok(())
}

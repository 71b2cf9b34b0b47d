//! Zero-shot translation prompts.
//!
//! Every prompt has the shape `<instruction> <L1>: <source> <L2>:` and ends at
//! the target-language cue, where generation starts. Cue words and the
//! instruction are written in the instruction language.

use serde::{Deserialize, Serialize};

use super::{CorpusError, SentenceRecord};

pub const SUPPORTED_LANGUAGES: [&str; 4] = ["en", "fr", "de", "pt"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateId {
    /// "Translate from <L1> to <L2>:"
    #[default]
    Basic,
    /// "Translate <L1> to <L2>:"
    BasicShort,
    /// "A <L1> phrase is provided. The masterful <L1> translator flawlessly
    /// translates the phrase into <L2>:" (English instructions only).
    Masterful,
    /// User-supplied instruction and cue words; bypasses the language table.
    Custom {
        instruction: String,
        source_cue: String,
        target_cue: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptParts {
    /// The instruction `u`.
    pub instruction_text: String,
    /// The source sentence `x`.
    pub source_text: String,
    /// Full model input, ending at the target-language cue.
    pub rendered: String,
    pub instruction_lang: String,
}

/// English when translating out of English, otherwise the source language.
pub fn default_instruction_lang(record: &SentenceRecord) -> &str {
    if record.source_lang == "en" {
        "en"
    } else {
        &record.source_lang
    }
}

/// Name of `lang` as written in `in_lang`, as used for cue words.
pub fn language_name(lang: &str, in_lang: &str) -> Option<&'static str> {
    Some(match (in_lang, lang) {
        ("en", "en") => "English",
        ("en", "fr") => "French",
        ("en", "de") => "German",
        ("en", "pt") => "Portuguese",
        ("fr", "en") => "Anglais",
        ("fr", "fr") => "Français",
        ("fr", "de") => "Allemand",
        ("fr", "pt") => "Portugais",
        ("de", "en") => "Englisch",
        ("de", "fr") => "Französisch",
        ("de", "de") => "Deutsch",
        ("de", "pt") => "Portugiesisch",
        ("pt", "en") => "Inglês",
        ("pt", "fr") => "Francês",
        ("pt", "de") => "Alemão",
        ("pt", "pt") => "Português",
        _ => return None,
    })
}

/// "from <lang>" and "to <lang>" phrases; the inflection depends on the
/// instruction language, so they are listed rather than derived.
fn direction_phrases(in_lang: &str, from: &str, to: &str) -> Option<(&'static str, &'static str)> {
    let from_phrase = match (in_lang, from) {
        ("fr", "en") => "de l'anglais",
        ("fr", "fr") => "du français",
        ("fr", "de") => "de l'allemand",
        ("fr", "pt") => "du portugais",
        ("de", "en") => "vom Englischen",
        ("de", "fr") => "vom Französischen",
        ("de", "de") => "vom Deutschen",
        ("de", "pt") => "vom Portugiesischen",
        ("pt", "en") => "do inglês",
        ("pt", "fr") => "do francês",
        ("pt", "de") => "do alemão",
        ("pt", "pt") => "do português",
        _ => return None,
    };
    let to_phrase = match (in_lang, to) {
        ("fr", "en") => "vers l'anglais",
        ("fr", "fr") => "vers le français",
        ("fr", "de") => "vers l'allemand",
        ("fr", "pt") => "vers le portugais",
        ("de", "en") => "ins Englische",
        ("de", "fr") => "ins Französische",
        ("de", "de") => "ins Deutsche",
        ("de", "pt") => "ins Portugiesische",
        ("pt", "en") => "para o inglês",
        ("pt", "fr") => "para o francês",
        ("pt", "de") => "para o alemão",
        ("pt", "pt") => "para o português",
        _ => return None,
    };
    Some((from_phrase, to_phrase))
}

fn basic_instruction(in_lang: &str, from: &str, to: &str) -> Option<String> {
    if in_lang == "en" {
        return Some(format!(
            "Translate from {} to {}:",
            language_name(from, "en")?,
            language_name(to, "en")?
        ));
    }
    let (from_phrase, to_phrase) = direction_phrases(in_lang, from, to)?;
    let verb = match in_lang {
        "fr" => "Traduisez",
        "de" => "Übersetzen Sie",
        "pt" => "Traduza",
        _ => return None,
    };
    Some(format!("{verb} {from_phrase} {to_phrase}:"))
}

fn unsupported(what: &str, record: &SentenceRecord, in_lang: &str) -> CorpusError {
    CorpusError::Config(format!(
        "{what}: no built-in template for {} -> {} with {in_lang} instructions \
         (supported languages: {}; use a custom template otherwise)",
        record.source_lang,
        record.target_lang,
        SUPPORTED_LANGUAGES.join(", ")
    ))
}

pub fn render_prompt(
    template: &TemplateId,
    record: &SentenceRecord,
    instruction_lang: &str,
) -> Result<PromptParts, CorpusError> {
    let (from, to) = (record.source_lang.as_str(), record.target_lang.as_str());
    let (instruction, source_cue, target_cue) = match template {
        TemplateId::Custom {
            instruction,
            source_cue,
            target_cue,
        } => (instruction.clone(), source_cue.clone(), target_cue.clone()),
        builtin => {
            let cue = |lang: &str| {
                language_name(lang, instruction_lang)
                    .map(str::to_string)
                    .ok_or_else(|| unsupported("language name", record, instruction_lang))
            };
            let (source_cue, target_cue) = (cue(from)?, cue(to)?);
            let instruction = match builtin {
                TemplateId::Basic => basic_instruction(instruction_lang, from, to),
                TemplateId::BasicShort if instruction_lang == "en" => {
                    Some(format!("Translate {source_cue} to {target_cue}:"))
                }
                TemplateId::BasicShort => basic_instruction(instruction_lang, from, to),
                TemplateId::Masterful if instruction_lang == "en" => Some(format!(
                    "A {source_cue} phrase is provided. The masterful {source_cue} translator \
                     flawlessly translates the phrase into {target_cue}:"
                )),
                _ => None,
            }
            .ok_or_else(|| unsupported("instruction", record, instruction_lang))?;
            (instruction, source_cue, target_cue)
        }
    };
    let rendered = format!(
        "{instruction} {source_cue}: {} {target_cue}:",
        record.source.trim()
    );
    Ok(PromptParts {
        instruction_text: instruction,
        source_text: record.source.trim().to_string(),
        rendered,
        instruction_lang: instruction_lang.to_string(),
    })
}

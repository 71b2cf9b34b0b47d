use std::collections::HashMap;

use super::{LmError, TokenId, TokenSeq};

pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

const BOS_ID: TokenId = 0;
const EOS_ID: TokenId = 1;
const UNK_ID: TokenId = 2;

/// Token alphabet of the toy model.
///
/// Ids are dense. The three reserved entries come first (`<s>`, `</s>`,
/// `<unk>`), followed by surface tokens in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Builds a vocabulary from surface tokens. Duplicates and reserved
    /// strings are skipped.
    pub fn new<I, S>(surface: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for tok in [BOS_TOKEN, EOS_TOKEN, UNK_TOKEN] {
            vocab.push(tok);
        }
        for tok in surface {
            vocab.push(tok.as_ref());
        }
        vocab
    }

    /// Rebuilds a vocabulary from its full entry list (reserved entries included).
    pub fn from_entries(entries: Vec<String>) -> Result<Self, LmError> {
        if entries.len() < 3
            || entries[0] != BOS_TOKEN
            || entries[1] != EOS_TOKEN
            || entries[2] != UNK_TOKEN
        {
            return Err(LmError::Config(format!(
                "vocabulary must start with {BOS_TOKEN}, {EOS_TOKEN}, {UNK_TOKEN}"
            )));
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, tok) in entries.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(LmError::Config(format!("invalid vocabulary entry {tok:?}")));
            }
            if index.insert(tok.clone(), i as TokenId).is_some() {
                return Err(LmError::Config(format!("duplicate vocabulary entry {tok:?}")));
            }
        }
        Ok(Self {
            tokens: entries,
            index,
        })
    }

    fn push(&mut self, tok: &str) {
        if tok.is_empty() || self.index.contains_key(tok) {
            return;
        }
        self.index.insert(tok.to_string(), self.tokens.len() as TokenId);
        self.tokens.push(tok.to_string());
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn bos_id(&self) -> TokenId {
        BOS_ID
    }

    pub fn eos_id(&self) -> TokenId {
        EOS_ID
    }

    pub fn unk_id(&self) -> TokenId {
        UNK_ID
    }

    /// Ids that only ever appear as context, never as a predicted event.
    pub fn is_context_only(&self, id: TokenId) -> bool {
        id == BOS_ID || id == UNK_ID
    }

    /// Whitespace tokenizer; out-of-vocabulary words map to `<unk>`.
    pub fn tokenize(&self, text: &str) -> TokenSeq {
        text.split_whitespace()
            .map(|w| self.id(w).unwrap_or(UNK_ID))
            .collect()
    }

    /// Joins surface tokens with single spaces. `<s>` and `</s>` are not
    /// rendered; ids outside the vocabulary render as `<unk>`.
    pub fn detokenize(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .filter(|&&id| id != BOS_ID && id != EOS_ID)
            .map(|&id| self.token(id).unwrap_or(UNK_TOKEN))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

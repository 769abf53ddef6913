//! Vocabulary side-file: UTF-8, one token per line, line number = token id.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::token::SpecialTokens;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new(tokens: Vec<String>) -> Self {
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            index.entry(tok.clone()).or_insert(id as u32);
        }
        Vocab { tokens, index }
    }

    pub fn parse(text: &str) -> Self {
        Vocab::new(text.lines().map(str::to_string).collect())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Vocab::parse(&fs::read_to_string(path)?))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::new();
        for tok in &self.tokens {
            out.push_str(tok);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surface(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Surface string or a `#<id>` placeholder for ids past the end.
    pub fn surface_or_id(&self, id: u32) -> String {
        self.surface(id)
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{id}"))
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn encode_words(&self, words: &[&str]) -> Result<Vec<u32>> {
        words
            .iter()
            .map(|w| {
                self.id(w)
                    .ok_or_else(|| Error::InvalidArgument(format!("token {w:?} not in vocabulary")))
            })
            .collect()
    }

    /// Special ids looked up by name (`[Q]` falls back to `[unused0]`);
    /// anything missing keeps the BERT default.
    pub fn special_tokens(&self) -> SpecialTokens {
        let d = SpecialTokens::default();
        SpecialTokens {
            cls: self.id("[CLS]").unwrap_or(d.cls),
            q: self
                .id("[Q]")
                .or_else(|| self.id("[unused0]"))
                .unwrap_or(d.q),
            sep: self.id("[SEP]").unwrap_or(d.sep),
            mask: self.id("[MASK]").unwrap_or(d.mask),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_number_is_id() {
        let v = Vocab::parse("[PAD]\n[Q]\n[CLS]\n[SEP]\n[MASK]\nwhat\nis\n");
        assert_eq!(v.len(), 7);
        assert_eq!(v.id("what"), Some(5));
        assert_eq!(v.surface(6), Some("is"));
        assert_eq!(
            v.special_tokens(),
            SpecialTokens {
                cls: 2,
                q: 1,
                sep: 3,
                mask: 4
            }
        );
        assert_eq!(v.surface_or_id(99), "#99");
    }

    #[test]
    fn falls_back_to_bert_defaults() {
        let v = Vocab::parse("a\nb\n");
        assert_eq!(v.special_tokens(), SpecialTokens::default());
    }
}

//! Query and document token sequences, mask augmentation and the attention
//! mask that goes with them.
//!
//! A query is laid out as `[CLS] [Q] text+ [SEP] [MASK]*`. Mask columns of
//! the attention matrix are closed to every row but their own, so adding or
//! removing masks never changes what a non-mask position can see, and no mask
//! can see another mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest query sequence (structural + text + masks) the builder accepts.
pub const DEFAULT_HARD_CAP: usize = 512;

/// Number of structural tokens wrapped around the query text.
pub const STRUCTURAL_LEN: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    Cls,
    Q,
    Sep,
    Text,
    Mask,
    /// Document-side text token.
    DocText,
}

impl TokenKind {
    /// Kind code used by the `LIV1` store format.
    pub fn code(self) -> u8 {
        match self {
            TokenKind::Cls => 0,
            TokenKind::Q => 1,
            TokenKind::Sep => 2,
            TokenKind::Text => 3,
            TokenKind::Mask => 4,
            TokenKind::DocText => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => TokenKind::Cls,
            1 => TokenKind::Q,
            2 => TokenKind::Sep,
            3 => TokenKind::Text,
            4 => TokenKind::Mask,
            5 => TokenKind::DocText,
            _ => return None,
        })
    }

    pub fn is_mask(self) -> bool {
        self == TokenKind::Mask
    }

    /// `[CLS]`, `[Q]` and `[SEP]`. Masks are structural too in the wider
    /// sense but are tracked separately everywhere they matter.
    pub fn is_marker(self) -> bool {
        matches!(self, TokenKind::Cls | TokenKind::Q | TokenKind::Sep)
    }

    pub fn is_text(self) -> bool {
        matches!(self, TokenKind::Text | TokenKind::DocText)
    }
}

/// Vocabulary ids of the structural tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokens {
    pub cls: u32,
    pub q: u32,
    pub sep: u32,
    pub mask: u32,
}

impl Default for SpecialTokens {
    /// BERT uncased ids, with `[unused0]` standing in for `[Q]`.
    fn default() -> Self {
        SpecialTokens {
            cls: 101,
            q: 1,
            sep: 102,
            mask: 103,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub id: u32,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(id: u32, kind: TokenKind) -> Self {
        Token { id, kind }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSeq {
    tokens: Vec<Token>,
    source_text: Option<String>,
}

impl TokenSeq {
    /// Wraps raw tokens without checking the query layout.
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        TokenSeq {
            tokens,
            source_text: None,
        }
    }

    pub fn with_source_text(mut self, text: impl Into<String>) -> Self {
        self.source_text = Some(text.into());
        self
    }

    pub fn source_text(&self) -> Option<&str> {
        self.source_text.as_deref()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn kinds(&self) -> impl Iterator<Item = TokenKind> + '_ {
        self.tokens.iter().map(|t| t.kind)
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.tokens.iter().map(|t| t.id)
    }

    pub fn mask_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.kind.is_mask()).count()
    }

    pub fn non_mask_len(&self) -> usize {
        self.len() - self.mask_count()
    }

    /// Query text token ids in order.
    pub fn text_ids(&self) -> Vec<u32> {
        self.tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Text)
            .map(|t| t.id)
            .collect()
    }

    /// Position of the `n`th (0-based) query text token.
    pub fn text_position(&self, n: usize) -> Option<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind == TokenKind::Text)
            .nth(n)
            .map(|(i, _)| i)
    }

    /// Checks the `[CLS] [Q] text+ [SEP] [MASK]*` layout and that every mask
    /// carries `mask_id`.
    pub fn validate_query_layout(&self, mask_id: u32) -> Result<()> {
        let bad = |msg: &str| Err(Error::MalformedSequence(msg.to_string()));
        let kinds: Vec<TokenKind> = self.kinds().collect();
        if kinds.len() < STRUCTURAL_LEN + 1 {
            return bad("too short for [CLS][Q] text [SEP]");
        }
        if kinds[0] != TokenKind::Cls || kinds[1] != TokenKind::Q {
            return bad("query must start with [CLS][Q]");
        }
        let text_end = 2 + kinds[2..]
            .iter()
            .take_while(|k| **k == TokenKind::Text)
            .count();
        if text_end == 2 {
            return bad("no text tokens");
        }
        if kinds.get(text_end) != Some(&TokenKind::Sep) {
            return bad("[SEP] must follow the last text token");
        }
        for tok in &self.tokens[text_end + 1..] {
            if tok.kind != TokenKind::Mask {
                return bad("only masks may follow [SEP]");
            }
            if tok.id != mask_id {
                return bad("mask token carries the wrong vocabulary id");
            }
        }
        Ok(())
    }

    /// The first `len` tokens. A prefix of a mask-augmented query is the
    /// same query with fewer masks.
    pub fn prefix(&self, len: usize) -> TokenSeq {
        TokenSeq {
            tokens: self.tokens[..len.min(self.len())].to_vec(),
            source_text: self.source_text.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskPolicy {
    /// Pad with masks up to a total length; never truncates.
    PadToTotalLength(usize),
    /// Append exactly this many masks.
    FixedMaskCount(usize),
}

impl MaskPolicy {
    /// Masks appended to a query whose structural + text length is `base_len`.
    pub fn mask_count(self, base_len: usize) -> usize {
        match self {
            MaskPolicy::PadToTotalLength(total) => total.saturating_sub(base_len),
            MaskPolicy::FixedMaskCount(n) => n,
        }
    }

    /// Total sequence length for a query with `text_len` text tokens.
    pub fn total_len(self, text_len: usize) -> usize {
        let base = text_len + STRUCTURAL_LEN;
        base + self.mask_count(base)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QueryBuilder {
    pub special: SpecialTokens,
    pub hard_cap: usize,
}

impl Default for QueryBuilder {
    fn default() -> Self {
        QueryBuilder {
            special: SpecialTokens::default(),
            hard_cap: DEFAULT_HARD_CAP,
        }
    }
}

impl QueryBuilder {
    pub fn new(special: SpecialTokens) -> Self {
        QueryBuilder {
            special,
            ..Default::default()
        }
    }

    pub fn build(&self, text_token_ids: &[u32], policy: MaskPolicy) -> Result<TokenSeq> {
        if text_token_ids.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let base_len = text_token_ids.len() + STRUCTURAL_LEN;
        let total = base_len + policy.mask_count(base_len);
        if total > self.hard_cap {
            return Err(Error::OversizeQuery {
                len: total,
                cap: self.hard_cap,
            });
        }
        let sp = self.special;
        let mut tokens = Vec::with_capacity(total);
        tokens.push(Token::new(sp.cls, TokenKind::Cls));
        tokens.push(Token::new(sp.q, TokenKind::Q));
        tokens.extend(
            text_token_ids
                .iter()
                .map(|&id| Token::new(id, TokenKind::Text)),
        );
        tokens.push(Token::new(sp.sep, TokenKind::Sep));
        tokens.resize(total, Token::new(sp.mask, TokenKind::Mask));
        Ok(TokenSeq::from_tokens(tokens))
    }
}

/// Builds `[CLS] [Q] text [SEP] [MASK]*` with the default BERT special ids.
pub fn build_query_input(text_token_ids: &[u32], policy: MaskPolicy) -> Result<TokenSeq> {
    QueryBuilder::default().build(text_token_ids, policy)
}

/// Document sequences are plain text rows; every position sees every other.
pub fn build_document_input(token_ids: &[u32]) -> TokenSeq {
    TokenSeq::from_tokens(
        token_ids
            .iter()
            .map(|&id| Token::new(id, TokenKind::DocText))
            .collect(),
    )
}

/// `allowed[i][j]` is true iff position `i` may attend to position `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttentionMask {
    len: usize,
    allowed: Vec<bool>,
}

impl AttentionMask {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.len + j]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.allowed[i * self.len..(i + 1) * self.len]
    }

    /// Positions row `i` attends to, ascending.
    pub fn attended(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, a)| **a)
            .map(|(j, _)| j)
    }
}

pub fn build_attention_mask(seq: &TokenSeq) -> AttentionMask {
    let len = seq.len();
    let is_mask: Vec<bool> = seq.kinds().map(TokenKind::is_mask).collect();
    let mut allowed = vec![false; len * len];
    for i in 0..len {
        for j in 0..len {
            allowed[i * len + j] = i == j || !is_mask[j];
        }
    }
    AttentionMask { len, allowed }
}

//! Structural-token remapping: replace selected query rows by an exact copy
//! of their nearest (cosine) target row.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::{dot, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::token::TokenKind;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemapCondition {
    #[default]
    None,
    /// `[CLS]`, `[Q]`, `[SEP]` and masks all go to their nearest text row.
    #[serde(rename = "all-to-text")]
    AllStructuralToText,
    /// Only masks go to their nearest text row.
    #[serde(rename = "mask-to-text")]
    MaskToText,
    /// Masks go to their nearest non-mask row.
    #[serde(rename = "mask-to-all")]
    MaskToStructuralAndText,
}

impl RemapCondition {
    pub const ALL: [RemapCondition; 4] = [
        RemapCondition::None,
        RemapCondition::AllStructuralToText,
        RemapCondition::MaskToText,
        RemapCondition::MaskToStructuralAndText,
    ];

    pub fn flag(self) -> &'static str {
        match self {
            RemapCondition::None => "none",
            RemapCondition::AllStructuralToText => "all-to-text",
            RemapCondition::MaskToText => "mask-to-text",
            RemapCondition::MaskToStructuralAndText => "mask-to-all",
        }
    }

    /// Column heading used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            RemapCondition::None => "None",
            RemapCondition::AllStructuralToText => "All [X] -> Text",
            RemapCondition::MaskToText => "[MASK] -> Text",
            RemapCondition::MaskToStructuralAndText => "[MASK] -> Str. & Text",
        }
    }

    fn replaces(self, kind: TokenKind) -> bool {
        match self {
            RemapCondition::None => false,
            RemapCondition::AllStructuralToText => kind.is_marker() || kind.is_mask(),
            RemapCondition::MaskToText | RemapCondition::MaskToStructuralAndText => kind.is_mask(),
        }
    }

    fn is_target(self, kind: TokenKind) -> bool {
        match self {
            RemapCondition::MaskToStructuralAndText => !kind.is_mask(),
            _ => kind == TokenKind::Text,
        }
    }
}

impl fmt::Display for RemapCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag())
    }
}

impl FromStr for RemapCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RemapCondition::ALL
            .into_iter()
            .find(|c| c.flag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown remap condition {s:?}")))
    }
}

pub fn remap(query: &EmbeddingMatrix, cond: RemapCondition) -> Result<EmbeddingMatrix> {
    if cond == RemapCondition::None {
        return Ok(query.clone());
    }
    let targets: Vec<usize> = (0..query.len())
        .filter(|&i| cond.is_target(query.kind(i)))
        .collect();
    let sources: Vec<usize> = (0..query.len())
        .filter(|&i| cond.replaces(query.kind(i)))
        .collect();
    if sources.is_empty() {
        return Ok(query.clone());
    }
    if !targets.iter().any(|&t| query.kind(t) == TokenKind::Text) {
        return Err(Error::NoRemapTargets);
    }
    // Targets are never themselves replaced, so reading them from `query`
    // while writing into `out` is order-independent.
    let mut out = query.clone();
    for &i in &sources {
        let row = query.row(i);
        let mut best = (targets[0], f32::NEG_INFINITY);
        for &t in &targets {
            let s = dot(row, query.row(t));
            if s > best.1 {
                best = (t, s);
            }
        }
        out.row_mut(i).copy_from_slice(query.row(best.0));
    }
    Ok(out)
}

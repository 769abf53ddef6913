//! Embedding shift under token reordering, and per-position similarity to
//! the non-mask tokens of a query.

use std::fmt;

use serde::Serialize;

use crate::embedding::{cosine, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::token::{TokenKind, STRUCTURAL_LEN};
use crate::vocab::Vocab;

/// Tracked positions. Mask slots use 1-indexed sequence positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Slot {
    Cls,
    Q,
    Sep,
    Text1,
    Text3,
    Mask13,
    Mask32,
}

impl Slot {
    pub const ALL: [Slot; 7] = [
        Slot::Cls,
        Slot::Q,
        Slot::Sep,
        Slot::Text1,
        Slot::Text3,
        Slot::Mask13,
        Slot::Mask32,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Slot::Cls => "[CLS]",
            Slot::Q => "[Q]",
            Slot::Sep => "[SEP]",
            Slot::Text1 => "Text#1",
            Slot::Text3 => "Text#3",
            Slot::Mask13 => "Mask@13",
            Slot::Mask32 => "Mask@32",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftReport {
    pub distances: Vec<(Slot, f64)>,
}

impl ShiftReport {
    pub fn get(&self, slot: Slot) -> Option<f64> {
        self.distances
            .iter()
            .find(|(s, _)| *s == slot)
            .map(|(_, d)| *d)
    }
}

fn cosine_distance(a: &[f32], b: &[f32]) -> f64 {
    (1.0 - cosine(a, b) as f64).clamp(0.0, 2.0)
}

fn sep_row(m: &EmbeddingMatrix) -> Option<usize> {
    m.kinds().iter().position(|k| *k == TokenKind::Sep)
}

/// Cosine distance of each tracked slot between an original query and its
/// reordered form. `text_moves[i]` is the new text index of original text
/// token `i`, so text slots follow token identity rather than position.
/// Both matrices must be padded to 32 tokens so positions 13 and 32 are
/// masks.
pub fn shift_report(
    original: &EmbeddingMatrix,
    perturbed: &EmbeddingMatrix,
    text_moves: &[usize],
) -> Result<ShiftReport> {
    if original.len() != perturbed.len() {
        return Err(Error::IneligibleQuery(format!(
            "original has {} rows, perturbed has {}",
            original.len(),
            perturbed.len()
        )));
    }
    for m in [original, perturbed] {
        for pos in [13usize, 32] {
            if m.kinds().get(pos - 1) != Some(&TokenKind::Mask) {
                return Err(Error::IneligibleQuery(format!(
                    "position {pos} is not a mask"
                )));
            }
        }
    }
    let text_len = original
        .kinds()
        .iter()
        .filter(|k| **k == TokenKind::Text)
        .count();
    if text_len < 3 || text_moves.len() != text_len {
        return Err(Error::IneligibleQuery(format!(
            "need at least 3 text tokens and a move for each, got {text_len} tokens and {} moves",
            text_moves.len()
        )));
    }
    let (sep_a, sep_b) = match (sep_row(original), sep_row(perturbed)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::IneligibleQuery("missing [SEP]".into())),
    };
    let text_row = |n: usize| (STRUCTURAL_LEN - 1 + n, STRUCTURAL_LEN - 1 + text_moves[n]);
    let distances = Slot::ALL
        .iter()
        .map(|&slot| {
            let (a, b) = match slot {
                Slot::Cls => (0, 0),
                Slot::Q => (1, 1),
                Slot::Sep => (sep_a, sep_b),
                Slot::Text1 => text_row(0),
                Slot::Text3 => text_row(2),
                Slot::Mask13 => (12, 12),
                Slot::Mask32 => (31, 31),
            };
            (slot, cosine_distance(original.row(a), perturbed.row(b)))
        })
        .collect();
    Ok(ShiftReport { distances })
}

/// Cosine similarity of every position to every non-mask row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Heatmap {
    /// Row indices of the non-mask tokens, one per column.
    pub columns: Vec<usize>,
    pub column_token_ids: Vec<u32>,
    /// `values[p][c]`: position `p` against column `c`.
    pub values: Vec<Vec<f32>>,
}

impl Heatmap {
    pub fn to_csv(&self, vocab: &Vocab) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["position".to_string()];
        header.extend(
            self.column_token_ids
                .iter()
                .map(|&id| vocab.surface_or_id(id)),
        );
        w.write_record(&header)?;
        for (p, row) in self.values.iter().enumerate() {
            let mut rec = vec![p.to_string()];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn similarity_heatmap(query: &EmbeddingMatrix, max_positions: usize) -> Result<Heatmap> {
    if max_positions > query.len() {
        return Err(Error::InvalidArgument(format!(
            "max_positions {max_positions} exceeds sequence length {}",
            query.len()
        )));
    }
    let columns = query.non_mask_rows();
    let values = (0..max_positions)
        .map(|p| {
            columns
                .iter()
                .map(|&t| cosine(query.row(p), query.row(t)).clamp(-1.0, 1.0))
                .collect()
        })
        .collect();
    Ok(Heatmap {
        column_token_ids: columns.iter().map(|&t| query.token_ids()[t]).collect(),
        columns,
        values,
    })
}

//! Per-token embedding matrices and the vector kernels shared by the index,
//! the scorer and the remapper.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::token::TokenKind;

const LANES: usize = 8;

/// Inner product with eight independent accumulators. The summation order is
/// fixed, so results are reproducible across runs and thread counts.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    let s0 = (acc[0] + acc[4]) + (acc[1] + acc[5]);
    let s1 = (acc[2] + acc[6]) + (acc[3] + acc[7]);
    (s0 + s1) + tail
}

pub fn norm(v: &[f32]) -> f32 {
    dot(v, v).sqrt()
}

/// Scales `v` to unit L2 norm in place. Zero vectors are left untouched.
pub fn normalize(v: &mut [f32]) {
    let n = norm(v);
    if n > 0.0 {
        let inv = 1.0 / n;
        v.iter_mut().for_each(|x| *x *= inv);
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f32 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

/// Row-major token embeddings for one query or document, with the kind,
/// vocabulary id and sequence position of every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f32>,
    kinds: Vec<TokenKind>,
    token_ids: Vec<u32>,
    positions: Vec<u32>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Self {
        EmbeddingMatrix {
            dim,
            data: Vec::new(),
            kinds: Vec::new(),
            token_ids: Vec::new(),
            positions: Vec::new(),
        }
    }

    /// Builds a matrix from flat row-major data; positions are row indices.
    pub fn from_flat(
        dim: usize,
        data: Vec<f32>,
        kinds: Vec<TokenKind>,
        token_ids: Vec<u32>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDim);
        }
        let rows = kinds.len();
        if data.len() != rows * dim {
            return Err(Error::DimMismatch {
                expected: rows * dim,
                actual: data.len(),
            });
        }
        if token_ids.len() != rows {
            return Err(Error::InvalidArgument(format!(
                "{} token ids for {} rows",
                token_ids.len(),
                rows
            )));
        }
        Ok(EmbeddingMatrix {
            dim,
            data,
            kinds,
            token_ids,
            positions: (0..rows as u32).collect(),
        })
    }

    /// Convenience for tests and small fixtures: every row gets `kind` and
    /// token id 0.
    pub fn from_rows(rows: &[Vec<f32>], kind: TokenKind) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut m = EmbeddingMatrix::new(dim.max(1));
        for r in rows {
            m.push_row(r, kind, 0)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[f32], kind: TokenKind, token_id: u32) -> Result<()> {
        let position = self.kinds.len() as u32;
        self.push_row_at(row, kind, token_id, position)
    }

    pub fn push_row_at(
        &mut self,
        row: &[f32],
        kind: TokenKind,
        token_id: u32,
        position: u32,
    ) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        self.kinds.push(kind);
        self.token_ids.push(token_id);
        self.positions.push(position);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    pub fn kinds(&self) -> &[TokenKind] {
        &self.kinds
    }

    pub fn kind(&self, i: usize) -> TokenKind {
        self.kinds[i]
    }

    pub fn token_ids(&self) -> &[u32] {
        &self.token_ids
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn mask_count(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_mask()).count()
    }

    /// Indices of rows that are not masks.
    pub fn non_mask_rows(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !self.kinds[i].is_mask())
            .collect()
    }

    /// The first `n` rows.
    pub fn prefix(&self, n: usize) -> EmbeddingMatrix {
        let n = n.min(self.len());
        EmbeddingMatrix {
            dim: self.dim,
            data: self.data[..n * self.dim].to_vec(),
            kinds: self.kinds[..n].to_vec(),
            token_ids: self.token_ids[..n].to_vec(),
            positions: self.positions[..n].to_vec(),
        }
    }

    /// Largest deviation of any row norm from 1.
    pub fn max_norm_error(&self) -> f32 {
        self.rows()
            .map(|r| (norm(r) - 1.0).abs())
            .fold(0.0, f32::max)
    }
}

//! Exact token-level nearest-neighbour index for first-phase set retrieval.

use std::cmp::Ordering;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::embedding::{dot, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::store::CorpusStore;

/// Candidate depth per query token used when nothing else is configured.
pub const DEFAULT_K_PER_TOKEN: usize = 1000;

/// One corpus token matched by a query row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TokenHit {
    pub doc_id: u32,
    pub row: u32,
    pub score: f32,
}

/// Every corpus token vector in one flat row-major array, with the
/// (doc_id, row) each came from.
#[derive(Clone, Debug)]
pub struct TokenIndex {
    dim: usize,
    vectors: Vec<f32>,
    doc_ids: Vec<u32>,
    rows: Vec<u32>,
}

impl TokenIndex {
    pub fn build(store: &CorpusStore) -> Self {
        let total = store.total_tokens();
        let mut vectors = Vec::with_capacity(total * store.dim());
        let mut doc_ids = Vec::with_capacity(total);
        let mut rows = Vec::with_capacity(total);
        for p in store.passages() {
            vectors.extend_from_slice(p.rows.as_flat());
            doc_ids.extend(std::iter::repeat_n(p.doc_id, p.rows.len()));
            rows.extend(0..p.rows.len() as u32);
        }
        TokenIndex {
            dim: store.dim(),
            vectors,
            doc_ids,
            rows,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn vector(&self, entry: usize) -> &[f32] {
        &self.vectors[entry * self.dim..(entry + 1) * self.dim]
    }

    pub fn entry(&self, entry: usize) -> (u32, u32) {
        (self.doc_ids[entry], self.rows[entry])
    }

    /// Higher score first, then lower doc id, then lower row.
    fn rank_order(&self, a: &(f32, u32), b: &(f32, u32)) -> Ordering {
        b.0.total_cmp(&a.0)
            .then_with(|| self.doc_ids[a.1 as usize].cmp(&self.doc_ids[b.1 as usize]))
            .then_with(|| self.rows[a.1 as usize].cmp(&self.rows[b.1 as usize]))
    }

    /// The `k` entries with the highest inner product to `q`, by exact scan.
    pub fn token_topk(&self, q: &[f32], k: usize) -> Result<Vec<TokenHit>> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if q.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: q.len(),
            });
        }
        let mut scored: Vec<(f32, u32)> = self
            .vectors
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, v)| (dot(q, v), i as u32))
            .collect();
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, |a, b| self.rank_order(a, b));
            scored.truncate(k);
        }
        scored.sort_unstable_by(|a, b| self.rank_order(a, b));
        Ok(scored
            .into_iter()
            .map(|(score, i)| TokenHit {
                doc_id: self.doc_ids[i as usize],
                row: self.rows[i as usize],
                score,
            })
            .collect())
    }

    /// Top-k hits for every row of `query`, in row order.
    pub fn row_hits(&self, query: &EmbeddingMatrix, k: usize) -> Result<Vec<Vec<TokenHit>>> {
        let rows: Vec<&[f32]> = query.rows().collect();
        #[cfg(feature = "parallel")]
        let it = rows.par_iter();
        #[cfg(not(feature = "parallel"))]
        let it = rows.iter();
        it.map(|r| self.token_topk(r, k)).collect()
    }
}

/// Sorted, de-duplicated document ids gathered by set retrieval.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateSet {
    doc_ids: Vec<u32>,
}

impl CandidateSet {
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        CandidateSet { doc_ids: ids }
    }

    pub fn from_hits<'a>(hits: impl IntoIterator<Item = &'a [TokenHit]>) -> Self {
        CandidateSet::from_ids(hits.into_iter().flatten().map(|h| h.doc_id).collect())
    }

    pub fn doc_ids(&self) -> &[u32] {
        &self.doc_ids
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn contains(&self, doc_id: u32) -> bool {
        self.doc_ids.binary_search(&doc_id).is_ok()
    }

    pub fn is_subset(&self, other: &CandidateSet) -> bool {
        self.doc_ids.iter().all(|d| other.contains(*d))
    }
}

/// Union over all query rows of their top-`k_per_token` documents.
pub fn candidate_set(
    query_emb: &EmbeddingMatrix,
    k_per_token: usize,
    index: &TokenIndex,
) -> Result<CandidateSet> {
    if query_emb.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let hits = index.row_hits(query_emb, k_per_token)?;
    Ok(CandidateSet::from_hits(hits.iter().map(Vec::as_slice)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::TokenKind;

    const H: f32 = std::f32::consts::FRAC_1_SQRT_2;

    fn three_docs() -> (CorpusStore, TokenIndex) {
        let mut s = CorpusStore::new(2).unwrap();
        for (id, v) in [(10u32, [1.0, 0.0]), (11, [0.0, 1.0]), (12, [H, H])] {
            s.push(
                id,
                EmbeddingMatrix::from_rows(&[v.to_vec()], TokenKind::DocText).unwrap(),
            )
            .unwrap();
        }
        let idx = TokenIndex::build(&s);
        (s, idx)
    }

    #[test]
    fn topk_hand_computed() {
        let (_, idx) = three_docs();
        let hits = idx.token_topk(&[1.0, 0.0], 2).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].doc_id, 10);
        assert!((hits[0].score - 1.0).abs() < 1e-6);
        assert_eq!(hits[1].doc_id, 12);
        assert!((hits[1].score - 0.70710677).abs() < 1e-6);
    }

    #[test]
    fn topk_exhaustive_sorted() {
        let (_, idx) = three_docs();
        let hits = idx.token_topk(&[0.0, 1.0], 10).unwrap();
        assert_eq!(hits.len(), 3);
        assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn ties_prefer_lower_doc_id() {
        let mut s = CorpusStore::new(2).unwrap();
        for id in [5u32, 2, 9] {
            s.push(
                id,
                EmbeddingMatrix::from_rows(&[vec![1.0, 0.0]], TokenKind::DocText).unwrap(),
            )
            .unwrap();
        }
        let idx = TokenIndex::build(&s);
        let hits = idx.token_topk(&[1.0, 0.0], 2).unwrap();
        assert_eq!(
            hits.iter().map(|h| h.doc_id).collect::<Vec<_>>(),
            vec![2, 5]
        );
    }

    #[test]
    fn empty_index_errors() {
        let s = CorpusStore::new(2).unwrap();
        let idx = TokenIndex::build(&s);
        assert!(matches!(
            idx.token_topk(&[1.0, 0.0], 1),
            Err(Error::EmptyIndex)
        ));
    }

    #[test]
    fn candidate_set_examples() {
        let (s, idx) = three_docs();
        let one = EmbeddingMatrix::from_rows(&[vec![1.0, 0.0]], TokenKind::Text).unwrap();
        assert_eq!(candidate_set(&one, 1, &idx).unwrap().doc_ids(), &[10]);
        assert_eq!(
            candidate_set(&one, s.total_tokens(), &idx)
                .unwrap()
                .doc_ids(),
            &[10, 11, 12]
        );
        let two =
            EmbeddingMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], TokenKind::Text).unwrap();
        assert_eq!(candidate_set(&two, 1, &idx).unwrap().doc_ids(), &[10, 11]);
    }
}

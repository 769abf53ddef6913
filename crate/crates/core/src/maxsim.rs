//! Late-interaction scoring: for each query row, the best inner product with
//! any document row, summed over query rows.

use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::embedding::{dot, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::index::CandidateSet;
use crate::store::CorpusStore;
use crate::trec::RankedDoc;

/// Which document row a query row matched and what it contributed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alignment {
    pub query_row: usize,
    pub doc_row: usize,
    pub contribution: f32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: u32,
    pub score: f64,
    pub per_token_contrib: Vec<Alignment>,
}

/// Best document row for one query row; ties go to the lowest row.
#[inline]
pub fn row_max(q_row: &[f32], doc: &EmbeddingMatrix) -> (usize, f32) {
    let mut best = (0, f32::NEG_INFINITY);
    for (j, d) in doc.rows().enumerate() {
        let s = dot(q_row, d);
        if s > best.1 {
            best = (j, s);
        }
    }
    best
}

fn check(query: &EmbeddingMatrix, doc: &EmbeddingMatrix) -> Result<()> {
    if doc.is_empty() {
        return Err(Error::EmptyDocument);
    }
    if query.dim() != doc.dim() {
        return Err(Error::DimMismatch {
            expected: query.dim(),
            actual: doc.dim(),
        });
    }
    Ok(())
}

/// MaxSim with per-row attribution. Contributions are summed in row order in
/// f64.
pub fn maxsim(query: &EmbeddingMatrix, doc: &EmbeddingMatrix) -> Result<ScoredDoc> {
    check(query, doc)?;
    let mut score = 0.0f64;
    let mut per_token_contrib = Vec::with_capacity(query.len());
    for (i, q) in query.rows().enumerate() {
        let (j, s) = row_max(q, doc);
        score += s as f64;
        per_token_contrib.push(Alignment {
            query_row: i,
            doc_row: j,
            contribution: s,
        });
    }
    Ok(ScoredDoc {
        doc_id: 0,
        score,
        per_token_contrib,
    })
}

/// Score only; same summation order as [`maxsim`].
pub fn maxsim_score(query: &EmbeddingMatrix, doc: &EmbeddingMatrix) -> Result<f64> {
    check(query, doc)?;
    Ok(query.rows().map(|q| row_max(q, doc).1 as f64).sum())
}

/// `Σ_t w_t · max_j q_t·d_j` over the rows listed in `weights`.
pub fn weighted_maxsim(
    query: &EmbeddingMatrix,
    weights: &BTreeMap<usize, u32>,
    doc: &EmbeddingMatrix,
) -> Result<f64> {
    check(query, doc)?;
    Ok(weights
        .iter()
        .map(|(&t, &w)| w as f64 * row_max(query.row(t), doc).1 as f64)
        .sum())
}

/// Descending score, then ascending doc id.
pub fn sort_ranked(docs: &mut [RankedDoc]) {
    docs.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc_id.cmp(&b.doc_id)));
}

/// Orders candidates by MaxSim and keeps the top `cutoff`.
pub fn rerank(
    query: &EmbeddingMatrix,
    candidates: &CandidateSet,
    corpus: &CorpusStore,
    cutoff: usize,
) -> Result<Vec<RankedDoc>> {
    if cutoff == 0 {
        return Ok(Vec::new());
    }
    let score_one = |&doc_id: &u32| -> Result<RankedDoc> {
        let doc = corpus.get(doc_id).ok_or(Error::UnknownDocument(doc_id))?;
        Ok(RankedDoc {
            doc_id,
            score: maxsim_score(query, doc)?,
        })
    };
    #[cfg(feature = "parallel")]
    let scored: Result<Vec<RankedDoc>> = candidates.doc_ids().par_iter().map(score_one).collect();
    #[cfg(not(feature = "parallel"))]
    let scored: Result<Vec<RankedDoc>> = candidates.doc_ids().iter().map(score_one).collect();
    let mut scored = scored?;
    sort_ranked(&mut scored);
    scored.truncate(cutoff);
    Ok(scored)
}

/// Term weights implied by a remapped query: every non-mask row starts at 1
/// and gains one for each mask row that is an exact copy of it.
pub fn weight_histogram(query: &EmbeddingMatrix) -> Result<BTreeMap<usize, u32>> {
    let non_mask = query.non_mask_rows();
    let mut weights: BTreeMap<usize, u32> = non_mask.iter().map(|&t| (t, 1)).collect();
    for i in (0..query.len()).filter(|&i| query.kind(i).is_mask()) {
        let target = non_mask
            .iter()
            .copied()
            .find(|&t| bit_equal(query.row(t), query.row(i)))
            .ok_or(Error::UnmappedMask { row: i })?;
        *weights.get_mut(&target).expect("non-mask row") += 1;
    }
    Ok(weights)
}

fn bit_equal(a: &[f32], b: &[f32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

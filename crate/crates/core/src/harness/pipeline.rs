use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::index::{CandidateSet, TokenHit, TokenIndex, DEFAULT_K_PER_TOKEN};
use crate::maxsim::{rerank, row_max, sort_ranked};
use crate::remap::{remap, RemapCondition};
use crate::store::CorpusStore;
use crate::token::MaskPolicy;
use crate::trec::{RankedDoc, RunList};

use super::{PhaseConfig, QueryForm, QuerySet};

/// Second-phase scorer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reranker {
    #[default]
    MaxSim,
    /// Keeps the best token-hit score from set retrieval; used to check the
    /// phase wiring.
    CandidatePassthrough,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub k_per_token: usize,
    pub rerank_cutoff: usize,
    pub reranker: Reranker,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            k_per_token: DEFAULT_K_PER_TOKEN,
            rerank_cutoff: 1000,
            reranker: Reranker::MaxSim,
        }
    }
}

/// A corpus with its token index.
pub struct Engine<'a> {
    corpus: &'a CorpusStore,
    index: TokenIndex,
}

fn best_hit_scores<'a>(hits: impl IntoIterator<Item = &'a [TokenHit]>) -> BTreeMap<u32, f32> {
    let mut best: BTreeMap<u32, f32> = BTreeMap::new();
    for h in hits.into_iter().flatten() {
        best.entry(h.doc_id)
            .and_modify(|s| *s = s.max(h.score))
            .or_insert(h.score);
    }
    best
}

fn passthrough(best: &BTreeMap<u32, f32>, cutoff: usize) -> Vec<RankedDoc> {
    let mut docs: Vec<RankedDoc> = best
        .iter()
        .map(|(&doc_id, &s)| RankedDoc {
            doc_id,
            score: s as f64,
        })
        .collect();
    sort_ranked(&mut docs);
    docs.truncate(cutoff);
    docs
}

impl<'a> Engine<'a> {
    pub fn new(corpus: &'a CorpusStore) -> Self {
        Engine {
            corpus,
            index: TokenIndex::build(corpus),
        }
    }

    pub fn corpus(&self) -> &CorpusStore {
        self.corpus
    }

    pub fn index(&self) -> &TokenIndex {
        &self.index
    }

    /// Set retrieval with `retrieval_q`, then reranking with `rerank_q`.
    pub fn rank(
        &self,
        retrieval_q: &EmbeddingMatrix,
        rerank_q: &EmbeddingMatrix,
        params: &PipelineParams,
    ) -> Result<Vec<RankedDoc>> {
        if retrieval_q.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let hits = self.index.row_hits(retrieval_q, params.k_per_token)?;
        match params.reranker {
            Reranker::MaxSim => {
                let cands = CandidateSet::from_hits(hits.iter().map(Vec::as_slice));
                rerank(rerank_q, &cands, self.corpus, params.rerank_cutoff)
            }
            Reranker::CandidatePassthrough => Ok(passthrough(
                &best_hit_scores(hits.iter().map(Vec::as_slice)),
                params.rerank_cutoff,
            )),
        }
    }

    /// Runs every `(retrieval form, rerank form)` pair over all queries,
    /// encoding each query once at the longest length needed and scoring
    /// shorter forms as prefixes. With `verify`, every form is also encoded
    /// directly and compared row for row against its prefix.
    pub fn evaluate(
        &self,
        queries: &QuerySet,
        plan: &[(QueryForm, QueryForm)],
        params: &PipelineParams,
        verify: bool,
    ) -> Result<Vec<RunList>> {
        let forms: Vec<QueryForm> = plan.iter().flat_map(|(a, b)| [*a, *b]).collect();
        let per_query = |i: usize| -> Result<(String, Vec<Vec<RankedDoc>>)> {
            let prepared = PreparedQuery::prepare(self, queries, i, &forms, params.k_per_token)?;
            if verify {
                prepared.verify(queries, i, &forms)?;
            }
            let ranked = plan
                .iter()
                .map(|(r, s)| prepared.rank(self, *r, *s, params))
                .collect::<Result<Vec<_>>>()?;
            Ok((queries.qid(i), ranked))
        };
        #[cfg(feature = "parallel")]
        let results: Result<Vec<_>> = (0..queries.len()).into_par_iter().map(per_query).collect();
        #[cfg(not(feature = "parallel"))]
        let results: Result<Vec<_>> = (0..queries.len()).map(per_query).collect();

        let mut runs = vec![RunList::new(); plan.len()];
        for (qid, ranked) in results? {
            for (run, docs) in runs.iter_mut().zip(ranked) {
                run.insert(qid.clone(), docs);
            }
        }
        Ok(runs)
    }
}

/// Direct pipeline: encode both forms for every query, retrieve and rerank
/// per `phase`. This is the reference path [`Engine::evaluate`] must match.
pub fn run_pipeline(
    engine: &Engine<'_>,
    queries: &QuerySet,
    baseline: QueryForm,
    modified: QueryForm,
    phase: PhaseConfig,
    params: &PipelineParams,
) -> Result<RunList> {
    let (retrieval_form, rerank_form) = phase.split(baseline, modified);
    let one = |i: usize| -> Result<(String, Vec<RankedDoc>)> {
        let retrieval_q = queries.encode_form(i, retrieval_form)?;
        let rerank_q = queries.encode_form(i, rerank_form)?;
        Ok((
            queries.qid(i),
            engine.rank(&retrieval_q, &rerank_q, params)?,
        ))
    };
    #[cfg(feature = "parallel")]
    let results: Result<Vec<_>> = (0..queries.len()).into_par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<_>> = (0..queries.len()).map(one).collect();
    let mut run = RunList::new();
    for (qid, docs) in results? {
        run.insert(qid, docs);
    }
    Ok(run)
}

/// Token hits and per-document row maxima for every row of one encoded
/// query, so any prefix can be retrieved and scored without rescanning.
struct PrefixScorer {
    matrix: EmbeddingMatrix,
    hits: Vec<Vec<TokenHit>>,
    /// `rows x docs`, documents in corpus order.
    row_maxima: Vec<f32>,
    n_docs: usize,
}

impl PrefixScorer {
    fn build(engine: &Engine<'_>, matrix: EmbeddingMatrix, k: usize) -> Result<Self> {
        let hits = engine.index.row_hits(&matrix, k)?;
        let n_docs = engine.corpus.len();
        let mut row_maxima = Vec::with_capacity(matrix.len() * n_docs);
        for q in matrix.rows() {
            row_maxima.extend(
                engine
                    .corpus
                    .passages()
                    .iter()
                    .map(|p| row_max(q, &p.rows).1),
            );
        }
        Ok(PrefixScorer {
            matrix,
            hits,
            row_maxima,
            n_docs,
        })
    }

    fn score(&self, ordinal: usize, len: usize) -> f64 {
        (0..len)
            .map(|r| self.row_maxima[r * self.n_docs + ordinal] as f64)
            .sum()
    }
}

struct PreparedQuery {
    non_mask_len: usize,
    scorers: HashMap<RemapCondition, PrefixScorer>,
}

impl PreparedQuery {
    fn prepare(
        engine: &Engine<'_>,
        queries: &QuerySet,
        i: usize,
        forms: &[QueryForm],
        k: usize,
    ) -> Result<Self> {
        let non_mask_len = queries.non_mask_len(i);
        let max_masks = forms
            .iter()
            .map(|f| f.policy.mask_count(non_mask_len))
            .max()
            .unwrap_or(0);
        let full = queries.encode(i, MaskPolicy::FixedMaskCount(max_masks))?;
        let mut scorers = HashMap::new();
        for f in forms {
            if let Entry::Vacant(slot) = scorers.entry(f.remap) {
                slot.insert(PrefixScorer::build(engine, remap(&full, f.remap)?, k)?);
            }
        }
        Ok(PreparedQuery {
            non_mask_len,
            scorers,
        })
    }

    fn len_of(&self, form: QueryForm) -> usize {
        self.non_mask_len + form.policy.mask_count(self.non_mask_len)
    }

    fn verify(&self, queries: &QuerySet, i: usize, forms: &[QueryForm]) -> Result<()> {
        for &f in forms {
            let direct = queries.encode_form(i, f)?;
            let cached = self.scorers[&f.remap].matrix.prefix(self.len_of(f));
            if direct != cached {
                return Err(Error::InvalidArgument(format!(
                    "query {}: {:?} differs from the prefix of its longest encoding",
                    queries.qid(i),
                    f
                )));
            }
        }
        Ok(())
    }

    fn rank(
        &self,
        engine: &Engine<'_>,
        retrieval: QueryForm,
        rerank: QueryForm,
        params: &PipelineParams,
    ) -> Result<Vec<RankedDoc>> {
        let retrieval_len = self.len_of(retrieval);
        let hits = &self.scorers[&retrieval.remap].hits[..retrieval_len];
        if retrieval_len == 0 {
            return Err(Error::EmptyQuery);
        }
        let hit_slices = || hits.iter().map(Vec::as_slice);
        match params.reranker {
            Reranker::CandidatePassthrough => Ok(passthrough(
                &best_hit_scores(hit_slices()),
                params.rerank_cutoff,
            )),
            Reranker::MaxSim => {
                if params.rerank_cutoff == 0 {
                    return Ok(Vec::new());
                }
                let cands = CandidateSet::from_hits(hit_slices());
                let scorer = &self.scorers[&rerank.remap];
                let len = self.len_of(rerank);
                let mut docs = cands
                    .doc_ids()
                    .iter()
                    .map(|&doc_id| {
                        let ord = engine
                            .corpus
                            .ordinal(doc_id)
                            .ok_or(Error::UnknownDocument(doc_id))?;
                        Ok(RankedDoc {
                            doc_id,
                            score: scorer.score(ord, len),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                sort_ranked(&mut docs);
                docs.truncate(params.rerank_cutoff);
                Ok(docs)
            }
        }
    }
}

//! Shared generators and brute-force reference implementations.
#![allow(dead_code)]

use latemask::embedding::normalize;
use latemask::{CorpusStore, EmbeddingMatrix, Judgments, RankedDoc, TokenKind};
use rand::Rng;

pub fn unit_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<f32> {
    loop {
        let mut v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        if v.iter().any(|x| x.abs() > 1e-3) {
            normalize(&mut v);
            return v;
        }
    }
}

pub fn random_matrix<R: Rng>(
    rng: &mut R,
    rows: usize,
    dim: usize,
    kind: TokenKind,
) -> EmbeddingMatrix {
    let rows: Vec<Vec<f32>> = (0..rows).map(|_| unit_vec(rng, dim)).collect();
    EmbeddingMatrix::from_rows(&rows, kind).unwrap()
}

pub fn random_corpus<R: Rng>(rng: &mut R, docs: usize, max_len: usize, dim: usize) -> CorpusStore {
    let mut store = CorpusStore::new(dim).unwrap();
    for d in 0..docs as u32 {
        let len = rng.random_range(1..=max_len);
        store
            .push(d * 3 + 1, random_matrix(rng, len, dim, TokenKind::DocText))
            .unwrap();
    }
    store
}

pub fn random_text<R: Rng>(rng: &mut R, max_len: usize) -> Vec<u32> {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| rng.random_range(1000..30000)).collect()
}

pub fn oracle_dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

/// All-pairs MaxSim in f64.
pub fn oracle_maxsim(q: &EmbeddingMatrix, d: &EmbeddingMatrix) -> f64 {
    q.rows()
        .map(|qi| {
            d.rows()
                .map(|dj| oracle_dot(qi, dj))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

pub fn oracle_row_max(qi: &[f32], d: &EmbeddingMatrix) -> f64 {
    d.rows()
        .map(|dj| oracle_dot(qi, dj))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Score every document, sort by score then id, keep `cutoff`.
pub fn oracle_rank(
    q: &EmbeddingMatrix,
    corpus: &CorpusStore,
    ids: &[u32],
    cutoff: usize,
) -> Vec<(u32, f64)> {
    let mut all: Vec<(u32, f64)> = ids
        .iter()
        .map(|&id| (id, oracle_maxsim(q, corpus.get(id).unwrap())))
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(cutoff);
    all
}

pub fn grades(judg: &Judgments, qid: &str, docs: &[RankedDoc]) -> Vec<u32> {
    docs.iter().map(|d| judg.grade(qid, d.doc_id)).collect()
}

pub fn judged_grades(judg: &Judgments, qid: &str) -> Vec<u32> {
    judg.judged(qid).map(|(_, g)| g).collect()
}

pub fn oracle_ndcg(ranked: &[u32], judged: &[u32], k: usize) -> f64 {
    let dcg = |gs: &[u32]| -> f64 {
        let mut s = 0.0;
        for r in 1..=k.min(gs.len()) {
            s += gs[r - 1] as f64 / (r as f64 + 1.0).ln() * std::f64::consts::LN_2;
        }
        s
    };
    let mut ideal = judged.to_vec();
    ideal.sort_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        0.0
    } else {
        dcg(ranked) / idcg
    }
}

pub fn oracle_rr(ranked: &[u32], k: usize, min: u32) -> f64 {
    for r in 1..=k.min(ranked.len()) {
        if ranked[r - 1] >= min {
            return 1.0 / r as f64;
        }
    }
    0.0
}

pub fn oracle_ap(ranked: &[u32], judged: &[u32], min: u32) -> f64 {
    let total = judged.iter().filter(|g| **g >= min).count();
    if total == 0 {
        return 0.0;
    }
    let mut s = 0.0;
    for r in 1..=ranked.len() {
        if ranked[r - 1] >= min {
            let rel_above = ranked[..r].iter().filter(|g| **g >= min).count();
            s += rel_above as f64 / r as f64;
        }
    }
    s / total as f64
}

pub fn oracle_recall(ranked: &[u32], judged: &[u32], k: usize, min: u32) -> f64 {
    let total = judged.iter().filter(|g| **g >= min).count();
    if total == 0 {
        return 0.0;
    }
    ranked.iter().take(k).filter(|g| **g >= min).count() as f64 / total as f64
}

/// A random ranking over `n_docs` with random judgments (some unjudged).
pub fn random_instance<R: Rng>(
    rng: &mut R,
    qid: &str,
    n_docs: usize,
) -> (Vec<RankedDoc>, Judgments) {
    let mut judg = Judgments::new();
    for d in 0..n_docs as u32 {
        if rng.random_bool(0.6) {
            judg.insert(qid, d, rng.random_range(0..=3));
        }
    }
    let mut ids: Vec<u32> = (0..n_docs as u32 + 5).collect();
    let take = rng.random_range(0..=ids.len());
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.random_range(0..=i));
    }
    let docs = ids[..take]
        .iter()
        .enumerate()
        .map(|(r, &doc_id)| RankedDoc {
            doc_id,
            score: -(r as f64),
        })
        .collect();
    (docs, judg)
}
